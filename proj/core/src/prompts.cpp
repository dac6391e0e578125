#include "critex/prompts.hpp"

#include <regex>

#include "critex/io.hpp"

namespace critex::prompts {

namespace detail {
const std::map<std::string, std::string_view>& embedded_templates();
}

PromptLibrary::PromptLibrary(const std::filesystem::path& dir) {
    if (dir.empty()) return;
    if (!std::filesystem::is_directory(dir)) {
        throw PromptError("prompts directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".txt") {
            overrides_[entry.path().stem().string()] = io::read_file(entry.path());
        }
    }
}

const std::string& PromptLibrary::raw(const std::string& name) const {
    auto it = overrides_.find(name);
    if (it != overrides_.end()) return it->second;
    static const std::map<std::string, std::string>& embedded = [] {
        static std::map<std::string, std::string> copy;
        for (const auto& [key, value] : detail::embedded_templates()) {
            copy.emplace(key, std::string(value));
        }
        return std::ref(copy);
    }();
    auto eit = embedded.find(name);
    if (eit == embedded.end()) throw PromptError("unknown prompt template: " + name);
    return eit->second;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& vars) const {
    std::string out = raw(name);
    for (const auto& [key, value] : vars) {
        const std::string slot = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = out.find(slot, pos)) != std::string::npos) {
            out.replace(pos, slot.size(), value);
            pos += value.size();
        }
    }
    static const std::regex leftover(R"(\{[a-z_]+\})");
    std::smatch m;
    if (std::regex_search(out, m, leftover)) {
        throw PromptError("unresolved placeholder " + m[0].str() + " in template " + name);
    }
    return out;
}

std::vector<std::string> PromptLibrary::names() const {
    std::map<std::string, int> names;
    for (const auto& [name, _] : detail::embedded_templates()) names[name];
    for (const auto& [name, _] : overrides_) names[name];
    std::vector<std::string> out;
    for (const auto& [name, _] : names) out.push_back(name);
    return out;
}

}  // namespace critex::prompts
