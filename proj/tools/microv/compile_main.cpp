// microv-compile: iverilog-shaped front end for the microv subset simulator.
// Usage: microv-compile -o <artifact> <source.v>...
// Performs a full parse of every source (syntax errors exit 1, like a real
// compiler) and packs the sources into a JSON artifact for microv-run.

#include "microv.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    std::string output_path;
    std::vector<std::string> source_paths;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "-o") {
            if (i + 1 >= argc) {
                std::cerr << "microv-compile: -o requires an argument\n";
                return 1;
            }
            output_path = argv[++i];
        } else if (!arg.empty() && arg[0] == '-') {
            // Accept and ignore iverilog-style flags (-g2012, -Wall, ...).
        } else {
            source_paths.push_back(arg);
        }
    }
    if (output_path.empty() || source_paths.empty()) {
        std::cerr << "usage: microv-compile -o <artifact> <source.v>...\n";
        return 1;
    }

    std::vector<microv::SourceFile> sources;
    for (const auto& path : source_paths) {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "microv-compile: cannot open " << path << "\n";
            return 1;
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        sources.push_back({path, buffer.str()});
    }

    try {
        microv::check_sources(sources);
    } catch (const microv::Error& e) {
        std::cerr << e.what() << "\nsyntax error: compilation failed\n";
        return 1;
    }

    nlohmann::json artifact;
    artifact["microv"] = 1;
    artifact["files"] = nlohmann::json::array();
    for (const auto& source : sources) {
        artifact["files"].push_back({{"name", source.name}, {"text", source.text}});
    }
    std::ofstream out(output_path);
    if (!out) {
        std::cerr << "microv-compile: cannot write " << output_path << "\n";
        return 1;
    }
    out << artifact.dump();
    return 0;
}
