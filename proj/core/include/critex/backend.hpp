#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

namespace critex::backend {

struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CompletionRequest {
    std::string system;
    std::string user;
    bool json_only = true;
    int max_tokens = 2048;
};

/// Chat-completion backend. Implementations must be safe for concurrent
/// calls.
class LlmBackend {
  public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
    int call_count() const { return calls_; }

  protected:
    void count_call() {
        std::lock_guard<std::mutex> lock(mutex_);
        ++calls_;
    }

  private:
    std::mutex mutex_;
    int calls_ = 0;
};

/// Digest a prompt pair for transcript keying.
std::string prompt_digest(const CompletionRequest& request);

/// Transcript: prompt digest -> canned response, with a human-readable
/// note kept per entry for debugging.
class Transcript {
  public:
    void add(const std::string& digest, const std::string& response, const std::string& note);
    const std::string* find(const std::string& digest) const;
    std::size_t size() const { return entries_.size(); }

    nlohmann::ordered_json to_json() const;
    static Transcript from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static Transcript load(const std::filesystem::path& path);

  private:
    struct Entry {
        std::string response;
        std::string note;
    };
    std::map<std::string, Entry> entries_;
};

/// Replays canned responses keyed by prompt digest. A prompt with no
/// transcript entry is a hard error: scripted runs must be exhaustive.
class ScriptedBackend : public LlmBackend {
  public:
    explicit ScriptedBackend(Transcript transcript) : transcript_(std::move(transcript)) {}
    std::string complete(const CompletionRequest& request) override;

  private:
    Transcript transcript_;
};

/// Wraps an answering function and records every exchange into a
/// transcript; used to produce fixture transcripts.
class RecordingBackend : public LlmBackend {
  public:
    using Oracle = std::function<std::string(const CompletionRequest&)>;
    RecordingBackend(Oracle oracle, std::string note_prefix = "")
        : oracle_(std::move(oracle)), note_prefix_(std::move(note_prefix)) {}

    std::string complete(const CompletionRequest& request) override;
    const Transcript& transcript() const { return transcript_; }

  private:
    Oracle oracle_;
    std::string note_prefix_;
    Transcript transcript_;
    std::mutex mutex_;
};

/// OpenAI-style HTTP chat-completion backend.
class HttpChatBackend : public LlmBackend {
  public:
    HttpChatBackend(std::string base_url, std::string model, std::string api_key,
                    int timeout_seconds = 120);
    std::string complete(const CompletionRequest& request) override;

  private:
    std::string base_url_;
    std::string model_;
    std::string api_key_;
    int timeout_seconds_;
};

/// Parses a backend response as JSON; on failure re-asks once with a
/// JSON-only reminder appended, then throws BackendError.
nlohmann::json complete_json(LlmBackend& backend, const CompletionRequest& request);

}  // namespace critex::backend
