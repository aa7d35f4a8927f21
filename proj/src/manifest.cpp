#include "pdfool/manifest.hpp"

#include <iomanip>
#include <sstream>

namespace pdfool {

std::string hash_file(const std::string& path) {
    const std::string content = read_text_file(path);
    std::ostringstream out;
    out << "fnv64:" << std::hex << std::setfill('0') << std::setw(16) << fnv1a64(content);
    return out.str();
}

void RunManifest::save(const std::string& path) const {
    std::ostringstream out;
    out << "pdfool-manifest 1\n";
    out << "command " << command << '\n';
    for (const auto& [key, value] : config) out << "config " << key << '=' << value << '\n';
    for (const auto& [hash, file] : inputs) out << "input " << hash << ' ' << file << '\n';
    for (const auto& [hash, file] : outputs) out << "output " << hash << ' ' << file << '\n';
    write_text_file(path, out.str());
}

RunManifest RunManifest::load(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "pdfool-manifest 1") throw DataError("not a run manifest: " + path);

    RunManifest manifest;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto space = line.find(' ');
        if (space == std::string::npos) throw DataError("manifest: malformed line '" + line + "'");
        const std::string tag = line.substr(0, space);
        const std::string rest = line.substr(space + 1);
        if (tag == "command") {
            manifest.command = rest;
        } else if (tag == "config") {
            const auto eq = rest.find('=');
            if (eq == std::string::npos) throw DataError("manifest: malformed config line '" + line + "'");
            manifest.config.emplace_back(rest.substr(0, eq), rest.substr(eq + 1));
        } else if (tag == "input" || tag == "output") {
            const auto sep = rest.find(' ');
            if (sep == std::string::npos) throw DataError("manifest: malformed " + tag + " line '" + line + "'");
            auto& list = tag == "input" ? manifest.inputs : manifest.outputs;
            list.emplace_back(rest.substr(0, sep), rest.substr(sep + 1));
        } else {
            throw DataError("manifest: unknown tag '" + tag + "'");
        }
    }
    if (manifest.command.empty()) throw DataError("manifest: missing command");
    return manifest;
}

}  // namespace pdfool
