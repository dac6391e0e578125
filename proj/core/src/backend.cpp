#include "critex/backend.hpp"

#include "critex/io.hpp"

namespace critex::backend {

std::string prompt_digest(const CompletionRequest& request) {
    std::string material = request.system;
    material.push_back('\x1e');
    material += request.user;
    material.push_back('\x1e');
    material += request.json_only ? "json" : "text";
    return io::sha256_hex(material);
}

void Transcript::add(const std::string& digest, const std::string& response,
                     const std::string& note) {
    entries_[digest] = Entry{response, note};
}

const std::string* Transcript::find(const std::string& digest) const {
    auto it = entries_.find(digest);
    return it == entries_.end() ? nullptr : &it->second.response;
}

nlohmann::ordered_json Transcript::to_json() const {
    nlohmann::ordered_json entries = nlohmann::ordered_json::object();
    for (const auto& [digest, entry] : entries_) {
        entries[digest] = {{"response", entry.response}, {"note", entry.note}};
    }
    return nlohmann::ordered_json{{"version", 1}, {"entries", entries}};
}

Transcript Transcript::from_json(const nlohmann::json& j) {
    Transcript t;
    for (const auto& [digest, entry] : j.at("entries").items()) {
        t.entries_[digest] = Entry{entry.at("response").get<std::string>(),
                                   entry.value("note", std::string{})};
    }
    return t;
}

void Transcript::save(const std::filesystem::path& path) const {
    io::write_file(path, to_json().dump(2) + "\n");
}

Transcript Transcript::load(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(io::read_file(path)));
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
    count_call();
    const std::string digest = prompt_digest(request);
    if (const std::string* response = transcript_.find(digest)) return *response;
    std::string head = request.user.substr(0, 160);
    throw BackendError("no transcript entry for prompt digest " + digest + "; prompt head: " + head);
}

std::string RecordingBackend::complete(const CompletionRequest& request) {
    count_call();
    std::string response = oracle_(request);
    std::string note = note_prefix_ + request.user.substr(0, 80);
    std::lock_guard<std::mutex> lock(mutex_);
    transcript_.add(prompt_digest(request), response, note);
    return response;
}

nlohmann::json complete_json(LlmBackend& backend, const CompletionRequest& request) {
    std::string raw = backend.complete(request);
    auto parsed = nlohmann::json::parse(raw, nullptr, false);
    if (!parsed.is_discarded()) return parsed;

    CompletionRequest retry = request;
    retry.user += "\n\nReturn ONLY valid JSON.";
    raw = backend.complete(retry);
    parsed = nlohmann::json::parse(raw, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    throw BackendError("backend returned unparseable JSON twice; head: " + raw.substr(0, 160));
}

}  // namespace critex::backend
