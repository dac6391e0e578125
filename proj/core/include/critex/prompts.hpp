#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace critex::prompts {

struct PromptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Prompt templates are data: UTF-8 text files with {placeholder} slots.
/// A copy of every template ships embedded in the binary; a directory
/// override takes precedence file by file.
class PromptLibrary {
  public:
    /// Embedded templates only.
    PromptLibrary() = default;
    /// Embedded templates overridden by files in `dir` (when present).
    explicit PromptLibrary(const std::filesystem::path& dir);

    /// Renders a template. Unknown template names and unresolved
    /// placeholders are errors.
    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& vars) const;

    const std::string& raw(const std::string& name) const;
    std::vector<std::string> names() const;

  private:
    std::map<std::string, std::string> overrides_;
};

}  // namespace critex::prompts
