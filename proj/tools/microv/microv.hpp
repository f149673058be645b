#pragma once

// microv: a miniature Verilog-subset compiler and simulator.
//
// It exists so tbforge runs end-to-end on machines without a real Verilog
// toolchain. The two executables built from it follow the Icarus CLI shape
// (microv-compile -o out srcs...; microv-run artifact), so the harness treats
// them exactly like iverilog/vvp.
//
// Supported subset (two-state, combinational + one-shot initial blocks):
//   - module/endmodule with header or body port declarations
//   - input/output/wire/reg/integer declarations, vectors [msb:0]
//   - continuous assign with identifier/bit-select/concat left-hand sides
//   - module instantiation (named or positional, identifier/literal bindings)
//   - initial blocks: begin/end, blocking =, if/else, for, while, #delay,
//     $display/$write with %d %b %h %t, $time, $finish/$stop
//   - operators: ?: || && | ^ & == != === !== < <= > >= << >> + - * / %
//     unary ! ~ - + and reduction & | ^, concatenation {a, b}
//
// Simplifications, by design: no x/z states (=== behaves like ==), no always
// blocks or nonblocking assignment, no timescale (a #delay advances $time and
// settles combinational logic), initial blocks execute in declaration order.
// Loops are capped so a runaway testbench terminates with an error instead of
// hanging the simulator.

#include <stdexcept>
#include <string>
#include <vector>

namespace microv {

struct SourceFile {
    std::string name;
    std::string text;
};

class Error : public std::runtime_error {
public:
    Error(std::string file, int line, const std::string& message)
        : std::runtime_error(file + ":" + std::to_string(line) + ": error: " + message),
          file_(std::move(file)),
          line_(line) {}
    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

// Parses every source file; throws Error on the first syntax problem.
void check_sources(const std::vector<SourceFile>& sources);

// Parses, elaborates, and runs the design. Returns everything the design
// printed ($display output, newline-terminated). Throws Error on syntax,
// elaboration, or runtime problems.
std::string simulate(const std::vector<SourceFile>& sources);

} // namespace microv
