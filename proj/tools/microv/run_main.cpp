// microv-run: vvp-shaped runtime for artifacts produced by microv-compile.
// Usage: microv-run <artifact>
// Prints the design's $display output to stdout and exits 0 on a normal
// finish; elaboration/runtime errors go to stderr with a nonzero exit.

#include "microv.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: microv-run <artifact>\n";
        return 2;
    }
    std::ifstream in(argv[1]);
    if (!in) {
        std::cerr << "microv-run: cannot open " << argv[1] << "\n";
        return 2;
    }

    nlohmann::json artifact;
    try {
        in >> artifact;
    } catch (const nlohmann::json::parse_error&) {
        std::cerr << "microv-run: " << argv[1] << " is not a microv artifact\n";
        return 2;
    }
    if (!artifact.is_object() || artifact.value("microv", 0) != 1 ||
        !artifact.contains("files")) {
        std::cerr << "microv-run: " << argv[1] << " is not a microv artifact\n";
        return 2;
    }

    std::vector<microv::SourceFile> sources;
    for (const auto& file : artifact["files"]) {
        sources.push_back({file.value("name", "<unknown>"), file.value("text", "")});
    }

    try {
        std::cout << microv::simulate(sources);
    } catch (const microv::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    return 0;
}
