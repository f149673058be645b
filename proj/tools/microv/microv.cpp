#include "microv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace microv {

namespace {

constexpr int kMaxSettleIterations = 10000;
constexpr long kMaxLoopIterations = 10'000'000;
constexpr int kMaxInstanceDepth = 32;

// ---------------------------------------------------------------------------
// Lexer

struct Token {
    enum class Kind { Ident, Number, String, Punct, Eof };
    Kind kind = Kind::Eof;
    std::string text;
    std::uint64_t value = 0;
    int width = 0;  // 0 = unsized
    int line = 1;
};

class Lexer {
public:
    Lexer(const std::string& file, const std::string& text) : file_(file), text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token next() {
        Token token = current_;
        advance();
        return token;
    }

    [[noreturn]] void fail(const std::string& message, int line) const {
        throw Error(file_, line, message);
    }

    const std::string& file() const { return file_; }

private:
    void advance() {
        skip_space_and_comments();
        current_ = Token{};
        current_.line = line_;
        if (pos_ >= text_.size()) {
            current_.kind = Token::Kind::Eof;
            current_.text = "<eof>";
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
            lex_ident();
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '\'') {
            lex_number();
        } else if (c == '"') {
            lex_string();
        } else {
            lex_punct();
        }
    }

    void skip_space_and_comments() {
        for (;;) {
            while (pos_ < text_.size() &&
                   std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                if (text_[pos_] == '\n') ++line_;
                ++pos_;
            }
            if (pos_ + 1 < text_.size() && text_[pos_] == '/' && text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
                continue;
            }
            if (pos_ + 1 < text_.size() && text_[pos_] == '/' && text_[pos_ + 1] == '*') {
                int start_line = line_;
                pos_ += 2;
                while (pos_ + 1 < text_.size() &&
                       !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) {
                    if (text_[pos_] == '\n') ++line_;
                    ++pos_;
                }
                if (pos_ + 1 >= text_.size()) fail("unterminated block comment", start_line);
                pos_ += 2;
                continue;
            }
            return;
        }
    }

    void lex_ident() {
        std::size_t start = pos_;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
                ++pos_;
            } else {
                break;
            }
        }
        current_.kind = Token::Kind::Ident;
        current_.text = text_.substr(start, pos_ - start);
    }

    void lex_number() {
        current_.kind = Token::Kind::Number;
        std::uint64_t size = 0;
        bool have_size = false;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            if (text_[pos_] != '_') {
                size = size * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
                have_size = true;
            }
            ++pos_;
        }
        if (pos_ < text_.size() && text_[pos_] == '\'') {
            ++pos_;
            if (pos_ >= text_.size()) fail("truncated based literal", line_);
            char base_char = static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_])));
            ++pos_;
            int base;
            switch (base_char) {
                case 'b': base = 2; break;
                case 'o': base = 8; break;
                case 'd': base = 10; break;
                case 'h': base = 16; break;
                default: fail(std::string("unsupported literal base '") + base_char + "'", line_);
            }
            std::uint64_t value = 0;
            bool any = false;
            while (pos_ < text_.size()) {
                char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_])));
                if (c == '_') {
                    ++pos_;
                    continue;
                }
                int digit;
                if (c >= '0' && c <= '9') {
                    digit = c - '0';
                } else if (c >= 'a' && c <= 'f') {
                    digit = c - 'a' + 10;
                } else if (c == 'x' || c == 'z') {
                    fail("x/z literal values are not supported (two-state simulator)", line_);
                } else {
                    break;
                }
                if (digit >= base) break;
                value = value * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(digit);
                any = true;
                ++pos_;
            }
            if (!any) fail("based literal has no digits", line_);
            current_.value = value;
            current_.width = have_size ? static_cast<int>(size) : 32;
            if (current_.width <= 0 || current_.width > 64) {
                fail("literal width must be in [1, 64]", line_);
            }
            if (current_.width < 64) current_.value &= (1ULL << current_.width) - 1;
        } else {
            current_.value = size;
            current_.width = 0;  // plain decimal, unsized
        }
    }

    void lex_string() {
        int start_line = line_;
        ++pos_;  // opening quote
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            char c = text_[pos_];
            if (c == '\n') fail("unterminated string", start_line);
            if (c == '\\' && pos_ + 1 < text_.size()) {
                char esc = text_[pos_ + 1];
                switch (esc) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case '\\': out.push_back('\\'); break;
                    case '"': out.push_back('"'); break;
                    default: out.push_back(esc); break;
                }
                pos_ += 2;
                continue;
            }
            out.push_back(c);
            ++pos_;
        }
        if (pos_ >= text_.size()) fail("unterminated string", start_line);
        ++pos_;  // closing quote
        current_.kind = Token::Kind::String;
        current_.text = std::move(out);
    }

    void lex_punct() {
        static const char* kMulti[] = {"===", "!==", "==", "!=", "<=", ">=",
                                       "&&",  "||",  "<<", ">>"};
        for (const char* op : kMulti) {
            std::size_t len = std::string_view(op).size();
            if (text_.compare(pos_, len, op) == 0) {
                current_.kind = Token::Kind::Punct;
                current_.text = op;
                pos_ += len;
                return;
            }
        }
        current_.kind = Token::Kind::Punct;
        current_.text = text_.substr(pos_, 1);
        ++pos_;
    }

    std::string file_;
    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    Token current_;
};

// ---------------------------------------------------------------------------
// AST

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    enum class Kind { Number, Ref, Select, Unary, Binary, Ternary, Concat };
    Kind kind = Kind::Number;
    int line = 0;

    std::uint64_t value = 0;  // Number
    int width = 0;            // Number: 0 = unsized

    std::string name;  // Ref/Select
    ExprPtr index;     // Select: bit index
    ExprPtr index_lo;  // Select: range low (with index as high)

    std::string op;          // Unary/Binary
    ExprPtr a, b, c;         // operands
    std::vector<ExprPtr> parts;  // Concat
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
    enum class Kind { Block, Assign, If, While, For, Delay, Display, Finish, Null };
    Kind kind = Kind::Null;
    int line = 0;

    std::vector<StmtPtr> stmts;            // Block
    ExprPtr lhs, rhs;                      // Assign
    ExprPtr cond;                          // If/While/For
    StmtPtr then_branch, else_branch;      // If
    StmtPtr body;                          // While/For/Delay
    StmtPtr init, step;                    // For
    std::uint64_t delay = 0;               // Delay
    bool newline = true;                   // Display ($display vs $write)
    std::string fmt;                       // Display
    std::vector<ExprPtr> args;             // Display
};

struct NetDecl {
    enum class Kind { Input, Output, Wire, Reg, Integer };
    Kind kind = Kind::Wire;
    int width = 1;
    std::vector<std::string> names;
    int line = 0;
};

struct ContAssign {
    ExprPtr lhs;
    ExprPtr rhs;
    int line = 0;
};

struct Instance {
    std::string module_name;
    std::string instance_name;
    bool named = true;
    std::vector<std::pair<std::string, ExprPtr>> connections;  // port -> expr
    int line = 0;
};

struct ModuleDef {
    std::string name;
    std::string file;
    int line = 0;
    std::vector<std::string> port_order;
    std::vector<NetDecl> decls;
    std::vector<ContAssign> assigns;
    std::vector<Instance> instances;
    std::vector<StmtPtr> initials;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    Parser(const std::string& file, const std::string& text) : lexer_(file, text) {}

    std::vector<ModuleDef> parse_file() {
        std::vector<ModuleDef> modules;
        while (lexer_.peek().kind != Token::Kind::Eof) {
            if (!at_ident("module")) {
                fail("expected 'module'", lexer_.peek().line);
            }
            modules.push_back(parse_module());
        }
        return modules;
    }

private:
    Lexer lexer_;

    [[noreturn]] void fail(const std::string& message, int line) { lexer_.fail(message, line); }

    bool at_punct(std::string_view text) const {
        return lexer_.peek().kind == Token::Kind::Punct && lexer_.peek().text == text;
    }

    bool at_ident(std::string_view text) const {
        return lexer_.peek().kind == Token::Kind::Ident && lexer_.peek().text == text;
    }

    bool accept_punct(std::string_view text) {
        if (!at_punct(text)) return false;
        lexer_.next();
        return true;
    }

    bool accept_ident(std::string_view text) {
        if (!at_ident(text)) return false;
        lexer_.next();
        return true;
    }

    Token expect_punct(std::string_view text) {
        if (!at_punct(text)) {
            fail("expected '" + std::string(text) + "' before '" + lexer_.peek().text + "'",
                 lexer_.peek().line);
        }
        return lexer_.next();
    }

    Token expect_ident() {
        if (lexer_.peek().kind != Token::Kind::Ident) {
            fail("expected identifier before '" + lexer_.peek().text + "'", lexer_.peek().line);
        }
        return lexer_.next();
    }

    static bool is_keyword(const std::string& text) {
        static const char* kKeywords[] = {"module", "endmodule", "input",  "output", "inout",
                                          "wire",   "reg",       "integer", "assign", "initial",
                                          "begin",  "end",       "if",      "else",   "for",
                                          "while",  "always"};
        return std::any_of(std::begin(kKeywords), std::end(kKeywords),
                           [&](const char* k) { return text == k; });
    }

    int parse_range() {
        // '[' msb ':' lsb ']' with lsb required to be 0.
        Token open = expect_punct("[");
        Token msb = lexer_.next();
        if (msb.kind != Token::Kind::Number) fail("expected constant msb in range", msb.line);
        expect_punct(":");
        Token lsb = lexer_.next();
        if (lsb.kind != Token::Kind::Number) fail("expected constant lsb in range", lsb.line);
        expect_punct("]");
        if (lsb.value != 0) fail("only [msb:0] ranges are supported", open.line);
        if (msb.value > 63) fail("vectors wider than 64 bits are not supported", open.line);
        return static_cast<int>(msb.value) + 1;
    }

    ModuleDef parse_module() {
        Token kw = lexer_.next();  // 'module'
        ModuleDef mod;
        mod.file = lexer_.file();
        mod.line = kw.line;
        mod.name = expect_ident().text;

        if (accept_punct("(")) {
            if (!at_punct(")")) {
                parse_port_list(mod);
            }
            expect_punct(")");
        }
        expect_punct(";");

        while (!at_ident("endmodule")) {
            if (lexer_.peek().kind == Token::Kind::Eof) {
                fail("missing 'endmodule' for module '" + mod.name + "'", mod.line);
            }
            parse_item(mod);
        }
        lexer_.next();  // endmodule
        return mod;
    }

    void parse_port_list(ModuleDef& mod) {
        do {
            Token head = lexer_.peek();
            if (head.kind != Token::Kind::Ident) fail("expected port", head.line);
            if (head.text == "input" || head.text == "output" || head.text == "inout") {
                NetDecl decl;
                decl.line = head.line;
                lexer_.next();
                decl.kind = head.text == "input" ? NetDecl::Kind::Input : NetDecl::Kind::Output;
                accept_ident("wire");
                bool is_reg = accept_ident("reg");
                if (at_punct("[")) decl.width = parse_range();
                decl.names.push_back(expect_ident().text);
                mod.port_order.push_back(decl.names.back());
                mod.decls.push_back(std::move(decl));
                if (is_reg) {
                    NetDecl reg_decl;
                    reg_decl.kind = NetDecl::Kind::Reg;
                    reg_decl.width = mod.decls.back().width;
                    reg_decl.names = mod.decls.back().names;
                    mod.decls.push_back(std::move(reg_decl));
                }
            } else {
                // Classic style: bare names in the header, directions in the body.
                mod.port_order.push_back(expect_ident().text);
            }
        } while (accept_punct(","));
    }

    void parse_item(ModuleDef& mod) {
        Token head = lexer_.peek();
        if (head.kind != Token::Kind::Ident) {
            fail("unexpected '" + head.text + "' in module body", head.line);
        }
        const std::string& word = head.text;
        if (word == "input" || word == "output" || word == "inout" || word == "wire" ||
            word == "reg" || word == "integer") {
            parse_decl(mod);
        } else if (word == "assign") {
            parse_assign(mod);
        } else if (word == "initial") {
            lexer_.next();
            mod.initials.push_back(parse_stmt());
        } else if (word == "always") {
            fail("always blocks are not supported by this simulator", head.line);
        } else if (word == "endmodule") {
            return;
        } else if (is_keyword(word)) {
            fail("unsupported construct '" + word + "'", head.line);
        } else {
            parse_instance(mod);
        }
    }

    void parse_decl(ModuleDef& mod) {
        Token head = lexer_.next();
        NetDecl decl;
        decl.line = head.line;
        if (head.text == "input") {
            decl.kind = NetDecl::Kind::Input;
        } else if (head.text == "output") {
            decl.kind = NetDecl::Kind::Output;
        } else if (head.text == "inout") {
            decl.kind = NetDecl::Kind::Input;
        } else if (head.text == "wire") {
            decl.kind = NetDecl::Kind::Wire;
        } else if (head.text == "reg") {
            decl.kind = NetDecl::Kind::Reg;
        } else {
            decl.kind = NetDecl::Kind::Integer;
            decl.width = 32;
        }
        if (decl.kind != NetDecl::Kind::Integer) {
            accept_ident("wire");
            accept_ident("reg");
            if (at_punct("[")) decl.width = parse_range();
        }
        decl.names.push_back(expect_ident().text);
        while (accept_punct(",")) decl.names.push_back(expect_ident().text);
        expect_punct(";");
        mod.decls.push_back(std::move(decl));
    }

    void parse_assign(ModuleDef& mod) {
        Token kw = lexer_.next();  // 'assign'
        ContAssign assign;
        assign.line = kw.line;
        assign.lhs = parse_lvalue();
        expect_punct("=");
        assign.rhs = parse_expr();
        expect_punct(";");
        mod.assigns.push_back(std::move(assign));
    }

    void parse_instance(ModuleDef& mod) {
        Instance inst;
        Token type = expect_ident();
        inst.module_name = type.text;
        inst.line = type.line;
        inst.instance_name = expect_ident().text;
        expect_punct("(");
        if (at_punct(".")) {
            inst.named = true;
            do {
                expect_punct(".");
                std::string port = expect_ident().text;
                expect_punct("(");
                ExprPtr expr;
                if (!at_punct(")")) expr = parse_expr();
                expect_punct(")");
                inst.connections.emplace_back(std::move(port), std::move(expr));
            } while (accept_punct(","));
        } else if (!at_punct(")")) {
            inst.named = false;
            do {
                inst.connections.emplace_back("", parse_expr());
            } while (accept_punct(","));
        }
        expect_punct(")");
        expect_punct(";");
        mod.instances.push_back(std::move(inst));
    }

    StmtPtr parse_stmt() {
        Token head = lexer_.peek();
        auto stmt = std::make_unique<Stmt>();
        stmt->line = head.line;

        if (accept_punct(";")) {
            stmt->kind = Stmt::Kind::Null;
            return stmt;
        }
        if (accept_punct("#")) {
            Token amount = lexer_.next();
            if (amount.kind != Token::Kind::Number) fail("expected delay amount", amount.line);
            stmt->kind = Stmt::Kind::Delay;
            stmt->delay = amount.value;
            if (at_punct(";")) {
                lexer_.next();
            } else {
                stmt->body = parse_stmt();
            }
            return stmt;
        }
        if (accept_ident("begin")) {
            stmt->kind = Stmt::Kind::Block;
            while (!at_ident("end")) {
                if (lexer_.peek().kind == Token::Kind::Eof) fail("missing 'end'", head.line);
                stmt->stmts.push_back(parse_stmt());
            }
            lexer_.next();
            return stmt;
        }
        if (accept_ident("if")) {
            stmt->kind = Stmt::Kind::If;
            expect_punct("(");
            stmt->cond = parse_expr();
            expect_punct(")");
            stmt->then_branch = parse_stmt();
            if (accept_ident("else")) stmt->else_branch = parse_stmt();
            return stmt;
        }
        if (accept_ident("while")) {
            stmt->kind = Stmt::Kind::While;
            expect_punct("(");
            stmt->cond = parse_expr();
            expect_punct(")");
            stmt->body = parse_stmt();
            return stmt;
        }
        if (accept_ident("for")) {
            stmt->kind = Stmt::Kind::For;
            expect_punct("(");
            stmt->init = parse_assign_stmt(false);
            expect_punct(";");
            stmt->cond = parse_expr();
            expect_punct(";");
            stmt->step = parse_assign_stmt(false);
            expect_punct(")");
            stmt->body = parse_stmt();
            return stmt;
        }
        if (at_ident("$display") || at_ident("$write")) {
            bool newline = head.text == "$display";
            lexer_.next();
            stmt->kind = Stmt::Kind::Display;
            stmt->newline = newline;
            expect_punct("(");
            if (lexer_.peek().kind != Token::Kind::String) {
                fail("$display expects a format string first", lexer_.peek().line);
            }
            stmt->fmt = lexer_.next().text;
            while (accept_punct(",")) stmt->args.push_back(parse_expr());
            expect_punct(")");
            expect_punct(";");
            return stmt;
        }
        if (at_ident("$finish") || at_ident("$stop")) {
            lexer_.next();
            stmt->kind = Stmt::Kind::Finish;
            if (accept_punct("(")) {
                if (lexer_.peek().kind == Token::Kind::Number) lexer_.next();
                expect_punct(")");
            }
            expect_punct(";");
            return stmt;
        }
        if (head.kind == Token::Kind::Ident && head.text[0] == '$') {
            fail("unsupported system task '" + head.text + "'", head.line);
        }
        if (head.kind == Token::Kind::Ident && is_keyword(head.text)) {
            fail("unsupported statement '" + head.text + "'", head.line);
        }
        auto assign = parse_assign_stmt(true);
        return assign;
    }

    StmtPtr parse_assign_stmt(bool want_semicolon) {
        auto stmt = std::make_unique<Stmt>();
        stmt->kind = Stmt::Kind::Assign;
        stmt->line = lexer_.peek().line;
        stmt->lhs = parse_lvalue();
        if (at_punct("<=")) {
            fail("nonblocking assignment is not supported; use blocking '='", lexer_.peek().line);
        }
        expect_punct("=");
        stmt->rhs = parse_expr();
        if (want_semicolon) expect_punct(";");
        return stmt;
    }

    ExprPtr parse_lvalue() {
        Token head = lexer_.peek();
        if (at_punct("{")) {
            lexer_.next();
            auto expr = std::make_unique<Expr>();
            expr->kind = Expr::Kind::Concat;
            expr->line = head.line;
            do {
                expr->parts.push_back(parse_lvalue());
            } while (accept_punct(","));
            expect_punct("}");
            return expr;
        }
        Token name = expect_ident();
        if (is_keyword(name.text)) fail("unexpected keyword '" + name.text + "'", name.line);
        auto expr = std::make_unique<Expr>();
        expr->line = name.line;
        expr->name = name.text;
        if (accept_punct("[")) {
            expr->kind = Expr::Kind::Select;
            expr->index = parse_expr();
            if (accept_punct(":")) expr->index_lo = parse_expr();
            expect_punct("]");
        } else {
            expr->kind = Expr::Kind::Ref;
        }
        return expr;
    }

    ExprPtr parse_expr() { return parse_ternary(); }

    ExprPtr parse_ternary() {
        ExprPtr cond = parse_binary(0);
        if (!accept_punct("?")) return cond;
        auto expr = std::make_unique<Expr>();
        expr->kind = Expr::Kind::Ternary;
        expr->line = cond->line;
        expr->a = std::move(cond);
        expr->b = parse_expr();
        expect_punct(":");
        expr->c = parse_expr();
        return expr;
    }

    struct Level {
        std::vector<std::string_view> ops;
    };

    static const std::vector<Level>& levels() {
        static const std::vector<Level> kLevels = {
            {{"||"}},
            {{"&&"}},
            {{"|"}},
            {{"^"}},
            {{"&"}},
            {{"===", "!==", "==", "!="}},
            {{"<", "<=", ">", ">="}},
            {{"<<", ">>"}},
            {{"+", "-"}},
            {{"*", "/", "%"}},
        };
        return kLevels;
    }

    ExprPtr parse_binary(std::size_t level) {
        if (level >= levels().size()) return parse_unary();
        ExprPtr lhs = parse_binary(level + 1);
        for (;;) {
            bool matched = false;
            for (std::string_view op : levels()[level].ops) {
                if (at_punct(op)) {
                    Token token = lexer_.next();
                    auto expr = std::make_unique<Expr>();
                    expr->kind = Expr::Kind::Binary;
                    expr->line = token.line;
                    expr->op = token.text;
                    expr->a = std::move(lhs);
                    expr->b = parse_binary(level + 1);
                    lhs = std::move(expr);
                    matched = true;
                    break;
                }
            }
            if (!matched) return lhs;
        }
    }

    ExprPtr parse_unary() {
        Token head = lexer_.peek();
        if (at_punct("!") || at_punct("~") || at_punct("-") || at_punct("+") || at_punct("&") ||
            at_punct("|") || at_punct("^")) {
            Token op = lexer_.next();
            auto expr = std::make_unique<Expr>();
            expr->kind = Expr::Kind::Unary;
            expr->line = op.line;
            expr->op = op.text;
            expr->a = parse_unary();
            return expr;
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        Token head = lexer_.peek();
        if (head.kind == Token::Kind::Number) {
            Token token = lexer_.next();
            auto expr = std::make_unique<Expr>();
            expr->kind = Expr::Kind::Number;
            expr->line = token.line;
            expr->value = token.value;
            expr->width = token.width;
            return expr;
        }
        if (at_punct("(")) {
            lexer_.next();
            ExprPtr inner = parse_expr();
            expect_punct(")");
            return inner;
        }
        if (at_punct("{")) {
            lexer_.next();
            auto expr = std::make_unique<Expr>();
            expr->kind = Expr::Kind::Concat;
            expr->line = head.line;
            do {
                expr->parts.push_back(parse_expr());
            } while (accept_punct(","));
            expect_punct("}");
            return expr;
        }
        if (head.kind == Token::Kind::Ident) {
            if (head.text == "$time") {
                lexer_.next();
                auto expr = std::make_unique<Expr>();
                expr->kind = Expr::Kind::Ref;
                expr->line = head.line;
                expr->name = "$time";
                return expr;
            }
            if (head.text[0] == '$') {
                fail("unsupported system function '" + head.text + "'", head.line);
            }
            if (is_keyword(head.text)) {
                fail("unexpected keyword '" + head.text + "' in expression", head.line);
            }
            return parse_lvalue();
        }
        fail("unexpected '" + head.text + "' in expression", head.line);
    }
};

// ---------------------------------------------------------------------------
// Elaboration: flatten the instance tree into one net list.

struct Net {
    std::string name;
    int width = 1;
    std::uint64_t value = 0;
};

struct Scope {
    std::unordered_map<std::string, int> net_of;
    std::string path;
    std::string file;
};

struct FlatAssign {
    int scope = 0;
    const ContAssign* assign = nullptr;
};

struct FlatInitial {
    int scope = 0;
    const Stmt* stmt = nullptr;
};

class Design {
public:
    Design(const std::vector<ModuleDef>& modules, const std::string& top_file)
        : default_file_(top_file) {
        for (const auto& mod : modules) {
            if (!modules_.emplace(mod.name, &mod).second) {
                throw Error(mod.file, mod.line, "duplicate module '" + mod.name + "'");
            }
        }
        const ModuleDef* top = pick_top(modules);
        elaborate(*top, "", {}, 0);
    }

    std::string run();

private:
    static std::uint64_t mask_for(int width) {
        return width >= 64 ? ~0ULL : ((1ULL << width) - 1);
    }

    const ModuleDef* pick_top(const std::vector<ModuleDef>& modules) {
        std::map<std::string, int> instantiated;
        for (const auto& mod : modules) {
            for (const auto& inst : mod.instances) ++instantiated[inst.module_name];
        }
        const ModuleDef* candidate = nullptr;
        const ModuleDef* candidate_with_initial = nullptr;
        for (const auto& mod : modules) {
            if (instantiated.count(mod.name)) continue;
            if (!candidate) candidate = &mod;
            if (!mod.initials.empty()) {
                if (candidate_with_initial) {
                    throw Error(mod.file, mod.line,
                                "multiple top-level modules with initial blocks");
                }
                candidate_with_initial = &mod;
            }
        }
        if (candidate_with_initial) return candidate_with_initial;
        if (candidate) return candidate;
        throw Error(default_file_, 1, "no top-level module (instantiation cycle?)");
    }

    int add_net(const std::string& path_name, int width) {
        nets_.push_back(Net{path_name, width, 0});
        return static_cast<int>(nets_.size() - 1);
    }

    // bindings: port name -> existing net index (alias into the parent).
    void elaborate(const ModuleDef& mod, const std::string& path,
                   const std::unordered_map<std::string, int>& bindings, int depth) {
        if (depth > kMaxInstanceDepth) {
            throw Error(mod.file, mod.line, "instance nesting too deep (cycle?)");
        }
        int scope_id = static_cast<int>(scopes_.size());
        scopes_.push_back(Scope{{}, path, mod.file});
        Scope& scope = scopes_.back();

        for (const auto& [port, net] : bindings) scope.net_of[port] = net;

        for (const auto& decl : mod.decls) {
            for (const auto& name : decl.names) {
                auto it = scope.net_of.find(name);
                if (it != scope.net_of.end()) {
                    // Port already bound to a parent net; adopt the declared
                    // width if the parent net was created as a placeholder.
                    if (nets_[static_cast<std::size_t>(it->second)].width < decl.width) {
                        nets_[static_cast<std::size_t>(it->second)].width = decl.width;
                    }
                    continue;
                }
                scope.net_of[name] = add_net(path.empty() ? name : path + "." + name, decl.width);
            }
        }

        for (const auto& assign : mod.assigns) {
            assigns_.push_back(FlatAssign{scope_id, &assign});
        }
        for (const auto& stmt : mod.initials) {
            initials_.push_back(FlatInitial{scope_id, stmt.get()});
        }

        for (const auto& inst : mod.instances) {
            auto it = modules_.find(inst.module_name);
            if (it == modules_.end()) {
                throw Error(mod.file, inst.line, "unknown module '" + inst.module_name + "'");
            }
            const ModuleDef& child = *it->second;
            std::unordered_map<std::string, int> child_bindings;

            auto bind = [&](const std::string& port, const Expr* expr) {
                if (!expr) return;  // unconnected port
                if (expr->kind == Expr::Kind::Ref) {
                    child_bindings[port] = resolve(scope_id, expr->name, expr->line, 1);
                } else if (expr->kind == Expr::Kind::Number) {
                    // Constant tie: a private net plus a constant driver.
                    int net = add_net(path + "." + inst.instance_name + "." + port + ".const",
                                      expr->width ? expr->width : 32);
                    const_ties_.emplace_back(net, expr->value);
                    child_bindings[port] = net;
                } else {
                    throw Error(mod.file, expr->line,
                                "port bindings must be identifiers or literals");
                }
            };

            if (inst.named) {
                for (const auto& [port, expr] : inst.connections) bind(port, expr.get());
            } else {
                if (inst.connections.size() > child.port_order.size()) {
                    throw Error(mod.file, inst.line,
                                "too many positional connections for '" + child.name + "'");
                }
                for (std::size_t i = 0; i < inst.connections.size(); ++i) {
                    bind(child.port_order[i], inst.connections[i].second.get());
                }
            }
            std::string child_path =
                path.empty() ? inst.instance_name : path + "." + inst.instance_name;
            elaborate(child, child_path, child_bindings, depth + 1);
        }
    }

    int resolve(int scope_id, const std::string& name, int line, int implicit_width) {
        Scope& scope = scopes_[static_cast<std::size_t>(scope_id)];
        auto it = scope.net_of.find(name);
        if (it != scope.net_of.end()) return it->second;
        // Verilog-style implicit net.
        int net = add_net(scope.path.empty() ? name : scope.path + "." + name, implicit_width);
        scope.net_of[name] = net;
        (void)line;
        return net;
    }

    // ---- evaluation --------------------------------------------------------

    struct FinishSignal {};

    std::uint64_t read_net(int net) const {
        const Net& n = nets_[static_cast<std::size_t>(net)];
        return n.value & mask_for(n.width);
    }

    int expr_width(const Expr& expr, int scope_id) {
        switch (expr.kind) {
            case Expr::Kind::Number:
                return expr.width ? expr.width : 32;
            case Expr::Kind::Ref: {
                if (expr.name == "$time") return 64;
                int net = resolve(scope_id, expr.name, expr.line, 1);
                return nets_[static_cast<std::size_t>(net)].width;
            }
            case Expr::Kind::Select: {
                if (!expr.index_lo) return 1;
                return static_cast<int>(eval(*expr.index, scope_id) -
                                        eval(*expr.index_lo, scope_id)) + 1;
            }
            case Expr::Kind::Unary:
                if (expr.op == "!" || expr.op == "&" || expr.op == "|" || expr.op == "^") return 1;
                return expr_width(*expr.a, scope_id);
            case Expr::Kind::Binary: {
                if (expr.op == "==" || expr.op == "!=" || expr.op == "===" || expr.op == "!==" ||
                    expr.op == "<" || expr.op == "<=" || expr.op == ">" || expr.op == ">=" ||
                    expr.op == "&&" || expr.op == "||") {
                    return 1;
                }
                if (expr.op == "<<" || expr.op == ">>") return expr_width(*expr.a, scope_id);
                return std::max(expr_width(*expr.a, scope_id), expr_width(*expr.b, scope_id));
            }
            case Expr::Kind::Ternary:
                return std::max(expr_width(*expr.b, scope_id), expr_width(*expr.c, scope_id));
            case Expr::Kind::Concat: {
                int total = 0;
                for (const auto& part : expr.parts) total += expr_width(*part, scope_id);
                return total;
            }
        }
        return 1;
    }

    std::uint64_t eval(const Expr& expr, int scope_id) {
        switch (expr.kind) {
            case Expr::Kind::Number:
                return expr.value;
            case Expr::Kind::Ref: {
                if (expr.name == "$time") return time_;
                return read_net(resolve(scope_id, expr.name, expr.line, 1));
            }
            case Expr::Kind::Select: {
                int net = resolve(scope_id, expr.name, expr.line, 1);
                std::uint64_t value = read_net(net);
                std::uint64_t high = eval(*expr.index, scope_id);
                std::uint64_t low = expr.index_lo ? eval(*expr.index_lo, scope_id) : high;
                if (high < low || high > 63) {
                    throw Error(scopes_[static_cast<std::size_t>(scope_id)].file, expr.line,
                                "bad bit select");
                }
                int width = static_cast<int>(high - low) + 1;
                return (value >> low) & mask_for(width);
            }
            case Expr::Kind::Unary: {
                std::uint64_t value = eval(*expr.a, scope_id);
                int width = expr_width(*expr.a, scope_id);
                if (expr.op == "!") return value == 0 ? 1 : 0;
                if (expr.op == "~") return (~value) & mask_for(width);
                if (expr.op == "-") return (~value + 1) & ~0ULL;
                if (expr.op == "+") return value;
                if (expr.op == "&") return (value & mask_for(width)) == mask_for(width) ? 1 : 0;
                if (expr.op == "|") return value != 0 ? 1 : 0;
                if (expr.op == "^") return static_cast<std::uint64_t>(__builtin_popcountll(value) & 1);
                break;
            }
            case Expr::Kind::Binary: {
                if (expr.op == "&&") {
                    return (eval(*expr.a, scope_id) != 0 && eval(*expr.b, scope_id) != 0) ? 1 : 0;
                }
                if (expr.op == "||") {
                    return (eval(*expr.a, scope_id) != 0 || eval(*expr.b, scope_id) != 0) ? 1 : 0;
                }
                std::uint64_t a = eval(*expr.a, scope_id);
                std::uint64_t b = eval(*expr.b, scope_id);
                if (expr.op == "+") return a + b;
                if (expr.op == "-") return a - b;
                if (expr.op == "*") return a * b;
                if (expr.op == "/") {
                    if (b == 0) {
                        throw Error(scopes_[static_cast<std::size_t>(scope_id)].file, expr.line,
                                    "division by zero");
                    }
                    return a / b;
                }
                if (expr.op == "%") {
                    if (b == 0) {
                        throw Error(scopes_[static_cast<std::size_t>(scope_id)].file, expr.line,
                                    "modulo by zero");
                    }
                    return a % b;
                }
                if (expr.op == "&") return a & b;
                if (expr.op == "|") return a | b;
                if (expr.op == "^") return a ^ b;
                if (expr.op == "<<") return b >= 64 ? 0 : a << b;
                if (expr.op == ">>") return b >= 64 ? 0 : a >> b;
                if (expr.op == "==" || expr.op == "===") return a == b ? 1 : 0;
                if (expr.op == "!=" || expr.op == "!==") return a != b ? 1 : 0;
                if (expr.op == "<") return a < b ? 1 : 0;
                if (expr.op == "<=") return a <= b ? 1 : 0;
                if (expr.op == ">") return a > b ? 1 : 0;
                if (expr.op == ">=") return a >= b ? 1 : 0;
                break;
            }
            case Expr::Kind::Ternary:
                return eval(*expr.a, scope_id) != 0 ? eval(*expr.b, scope_id)
                                                    : eval(*expr.c, scope_id);
            case Expr::Kind::Concat: {
                std::uint64_t out = 0;
                for (const auto& part : expr.parts) {
                    int width = expr_width(*part, scope_id);
                    out = (out << width) | (eval(*part, scope_id) & mask_for(width));
                }
                return out;
            }
        }
        throw Error(scopes_[static_cast<std::size_t>(scope_id)].file, expr.line,
                    "cannot evaluate expression");
    }

    // Returns true when any net changed.
    bool store(const Expr& lhs, std::uint64_t value, int scope_id) {
        switch (lhs.kind) {
            case Expr::Kind::Ref: {
                int net_id = resolve(scope_id, lhs.name, lhs.line, 1);
                Net& net = nets_[static_cast<std::size_t>(net_id)];
                std::uint64_t masked = value & mask_for(net.width);
                if (net.value == masked) return false;
                net.value = masked;
                return true;
            }
            case Expr::Kind::Select: {
                int net_id = resolve(scope_id, lhs.name, lhs.line, 1);
                std::uint64_t high = eval(*lhs.index, scope_id);
                std::uint64_t low = lhs.index_lo ? eval(*lhs.index_lo, scope_id) : high;
                Net& net = nets_[static_cast<std::size_t>(net_id)];
                if (high < low || high > 63) {
                    throw Error(scopes_[static_cast<std::size_t>(scope_id)].file, lhs.line,
                                "bad bit select in assignment");
                }
                int width = static_cast<int>(high - low) + 1;
                std::uint64_t field = mask_for(width) << low;
                std::uint64_t updated =
                    (net.value & ~field) | ((value & mask_for(width)) << low);
                updated &= mask_for(net.width);
                if (net.value == updated) return false;
                net.value = updated;
                return true;
            }
            case Expr::Kind::Concat: {
                // Leftmost part takes the most significant bits.
                bool changed = false;
                int total = expr_width(lhs, scope_id);
                int consumed = 0;
                for (const auto& part : lhs.parts) {
                    int width = expr_width(*part, scope_id);
                    int shift = total - consumed - width;
                    std::uint64_t slice = (value >> shift) & mask_for(width);
                    changed = store(*part, slice, scope_id) || changed;
                    consumed += width;
                }
                return changed;
            }
            default:
                throw Error(scopes_[static_cast<std::size_t>(scope_id)].file, lhs.line,
                            "invalid assignment target");
        }
    }

    void settle() {
        for (int iteration = 0; iteration < kMaxSettleIterations; ++iteration) {
            bool changed = false;
            for (const auto& fa : assigns_) {
                std::uint64_t value = eval(*fa.assign->rhs, fa.scope);
                changed = store(*fa.assign->lhs, value, fa.scope) || changed;
            }
            for (const auto& [net, value] : const_ties_) {
                Net& n = nets_[static_cast<std::size_t>(net)];
                std::uint64_t masked = value & mask_for(n.width);
                if (n.value != masked) {
                    n.value = masked;
                    changed = true;
                }
            }
            if (!changed) return;
        }
        throw Error(default_file_, 1, "combinational logic failed to settle (loop?)");
    }

    void format_display(const Stmt& stmt, int scope_id) {
        std::string out;
        std::size_t arg_index = 0;
        const std::string& fmt = stmt.fmt;
        for (std::size_t i = 0; i < fmt.size(); ++i) {
            if (fmt[i] != '%') {
                out.push_back(fmt[i]);
                continue;
            }
            if (i + 1 >= fmt.size()) {
                out.push_back('%');
                break;
            }
            std::size_t j = i + 1;
            while (j < fmt.size() && std::isdigit(static_cast<unsigned char>(fmt[j]))) ++j;
            if (j >= fmt.size()) {
                out.append(fmt, i, fmt.size() - i);
                break;
            }
            char spec = static_cast<char>(std::tolower(static_cast<unsigned char>(fmt[j])));
            if (spec == '%') {
                out.push_back('%');
                i = j;
                continue;
            }
            if (arg_index >= stmt.args.size()) {
                out.append(fmt, i, j - i + 1);  // no argument: leave the spec visible
                i = j;
                continue;
            }
            const Expr& arg = *stmt.args[arg_index];
            std::uint64_t value = eval(arg, scope_id);
            int width = expr_width(arg, scope_id);
            ++arg_index;
            switch (spec) {
                case 'd':
                case 't':
                    out += std::to_string(value);
                    break;
                case 'b': {
                    std::string bits;
                    for (int bit = width - 1; bit >= 0; --bit) {
                        bits.push_back(((value >> bit) & 1) ? '1' : '0');
                    }
                    out += bits.empty() ? "0" : bits;
                    break;
                }
                case 'h': {
                    std::ostringstream hex;
                    hex << std::hex << value;
                    out += hex.str();
                    break;
                }
                default:
                    throw Error(scopes_[static_cast<std::size_t>(scope_id)].file, stmt.line,
                                std::string("unsupported format specifier '%") + spec + "'");
            }
            i = j;
        }
        output_ += out;
        if (stmt.newline) output_ += '\n';
    }

    void exec(const Stmt& stmt, int scope_id) {
        switch (stmt.kind) {
            case Stmt::Kind::Null:
                return;
            case Stmt::Kind::Block:
                for (const auto& sub : stmt.stmts) exec(*sub, scope_id);
                return;
            case Stmt::Kind::Assign:
                store(*stmt.lhs, eval(*stmt.rhs, scope_id), scope_id);
                settle();
                return;
            case Stmt::Kind::If:
                if (eval(*stmt.cond, scope_id) != 0) {
                    exec(*stmt.then_branch, scope_id);
                } else if (stmt.else_branch) {
                    exec(*stmt.else_branch, scope_id);
                }
                return;
            case Stmt::Kind::While: {
                long iterations = 0;
                while (eval(*stmt.cond, scope_id) != 0) {
                    exec(*stmt.body, scope_id);
                    if (++iterations > kMaxLoopIterations) {
                        throw Error(scopes_[static_cast<std::size_t>(scope_id)].file, stmt.line,
                                    "runaway while loop");
                    }
                }
                return;
            }
            case Stmt::Kind::For: {
                long iterations = 0;
                exec(*stmt.init, scope_id);
                while (eval(*stmt.cond, scope_id) != 0) {
                    exec(*stmt.body, scope_id);
                    exec(*stmt.step, scope_id);
                    if (++iterations > kMaxLoopIterations) {
                        throw Error(scopes_[static_cast<std::size_t>(scope_id)].file, stmt.line,
                                    "runaway for loop");
                    }
                }
                return;
            }
            case Stmt::Kind::Delay:
                time_ += stmt.delay;
                settle();
                if (stmt.body) exec(*stmt.body, scope_id);
                return;
            case Stmt::Kind::Display:
                format_display(stmt, scope_id);
                return;
            case Stmt::Kind::Finish:
                throw FinishSignal{};
        }
    }

    std::unordered_map<std::string, const ModuleDef*> modules_;
    std::string default_file_;
    std::vector<Net> nets_;
    std::vector<Scope> scopes_;
    std::vector<FlatAssign> assigns_;
    std::vector<FlatInitial> initials_;
    std::vector<std::pair<int, std::uint64_t>> const_ties_;
    std::uint64_t time_ = 0;
    std::string output_;
};

std::string Design::run() {
    settle();
    try {
        for (const auto& init : initials_) {
            exec(*init.stmt, init.scope);
        }
    } catch (const FinishSignal&) {
        // normal termination
    }
    return std::move(output_);
}

std::vector<ModuleDef> parse_all(const std::vector<SourceFile>& sources) {
    std::vector<ModuleDef> modules;
    for (const auto& source : sources) {
        Parser parser(source.name, source.text);
        auto parsed = parser.parse_file();
        for (auto& mod : parsed) modules.push_back(std::move(mod));
    }
    return modules;
}

} // namespace

void check_sources(const std::vector<SourceFile>& sources) { parse_all(sources); }

std::string simulate(const std::vector<SourceFile>& sources) {
    auto modules = parse_all(sources);
    if (modules.empty()) {
        throw Error(sources.empty() ? "<none>" : sources.front().name, 1, "no modules in design");
    }
    Design design(modules, modules.front().file);
    return design.run();
}

} // namespace microv
