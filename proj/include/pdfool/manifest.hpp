#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pdfool/common.hpp"

namespace pdfool {

// Record of one CLI run: the fully resolved config plus content hashes of
// every input and output. Re-running the command from a manifest reproduces
// the outputs byte for byte.
struct RunManifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> config;   // key, value (sorted by key)
    std::vector<std::pair<std::string, std::string>> inputs;   // hash, path
    std::vector<std::pair<std::string, std::string>> outputs;  // hash, path relative to the out dir

    void save(const std::string& path) const;
    static RunManifest load(const std::string& path);
};

std::string hash_file(const std::string& path);  // "fnv64:<hex>"

}  // namespace pdfool
