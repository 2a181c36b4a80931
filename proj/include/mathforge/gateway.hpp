#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mathforge/embedder.hpp"
#include "mathforge/types.hpp"

namespace mathforge::llm {

struct ChatRequest {
    std::optional<std::string> system;
    std::string user;
    double temperature = 0.7;
    int max_tokens = 4096;
    // Stage label; part of the record/replay key and the mock dispatch key.
    std::string tag;
    // Disambiguates otherwise-identical requests (variant index, retry
    // attempt, sample index) so each gets its own recording slot.
    int salt = 0;
};

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    TokenUsage usage;
    std::string backend_id;
};

enum class GatewayErrorKind {
    transport,    // network / 5xx; retryable
    quota,        // 429; retryable
    auth,         // 401/403; not retryable
    replay_miss,  // no recording for the request key
    config,       // bad endpoint, missing API key, ...
    internal,     // contract violation inside the gateway
};

class GatewayError : public std::runtime_error {
public:
    GatewayError(GatewayErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    GatewayErrorKind kind() const { return kind_; }

private:
    GatewayErrorKind kind_;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_backoff{1000};
};

enum class BackendMode { live, replay, mock };

BackendMode backend_mode_from_string(const std::string& s);
const char* to_string(BackendMode m);

struct BackendConfig {
    BackendMode mode = BackendMode::mock;
    std::string endpoint_url;  // live: base URL ending at the API root, e.g. .../v1
    std::string model_name = "gpt-4o-mini";
    std::string embed_model_name = "text-embedding-3-small";
    std::string api_key_env = "LLM_API_KEY";
    int max_in_flight = 4;
    RetryPolicy retry;
    int embed_dim = 256;
    // When set: live responses are appended here; replay mode reads from here.
    std::string recordings_path;
};

// One chat/embedding provider. Implementations must be thread-safe.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

// Stable lookup key for a chat request: tag plus a digest of the full request
// content (so replay survives stage reordering and partial resume).
std::string chat_request_key(const ChatRequest& req);
std::string embedding_key(const std::string& model, int dim, const std::string& text);

nlohmann::json chat_request_to_json(const ChatRequest& req);

// Append-only JSONL store of {key, request, response, timestamp} records.
// On key collision the first recording wins.
class RecordingStore {
public:
    // Loads existing recordings when the file exists; `writable` opens the
    // file for appending.
    RecordingStore(std::filesystem::path path, bool writable);

    std::optional<nlohmann::json> find(const std::string& key) const;
    void append(const std::string& key, nlohmann::json request, nlohmann::json response);
    std::size_t size() const;

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, nlohmann::json> responses_;
    std::ofstream out_;
};

// Serves recorded responses; unknown keys raise replay_miss.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(std::shared_ptr<RecordingStore> store, int embed_dim);

    std::string id() const override { return "replay"; }
    ChatResponse complete(const ChatRequest& req) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

    void set_embed_model(std::string model) { embed_model_ = std::move(model); }

private:
    std::shared_ptr<RecordingStore> store_;
    std::string embed_model_ = "text-embedding-3-small";
    int embed_dim_;
};

// Pass-through decorator that records every successful exchange.
class RecordingBackend : public Backend {
public:
    RecordingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<RecordingStore> store,
                     std::string embed_model, int embed_dim);

    std::string id() const override { return inner_->id(); }
    ChatResponse complete(const ChatRequest& req) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    std::unique_ptr<Backend> inner_;
    std::shared_ptr<RecordingStore> store_;
    std::string embed_model_;
    int embed_dim_;
};

// Offline backend. Per-tag scripted responses (FIFO) and per-tag handlers
// take precedence; otherwise a deterministic synthesizer fabricates a
// well-formed response for each known tag from the request content, so whole
// pipeline runs work without a network and reproduce bit-for-bit.
class MockBackend : public Backend {
public:
    using Handler = std::function<std::string(const ChatRequest&)>;

    explicit MockBackend(int embed_dim);

    std::string id() const override { return "mock"; }
    ChatResponse complete(const ChatRequest& req) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

    // Queue a canned response for a tag; consumed in order.
    void script(const std::string& tag, std::string response);
    void set_handler(const std::string& tag, Handler handler);

private:
    std::string synthesize(const ChatRequest& req) const;

    mutable std::mutex mutex_;
    std::map<std::string, std::vector<std::string>> scripts_;
    std::map<std::string, std::size_t> script_pos_;
    std::map<std::string, Handler> handlers_;
    HashingEmbedder embedder_;
};

std::unique_ptr<Backend> make_http_backend(const BackendConfig& cfg);

struct CompletionOutcome {
    std::optional<ChatResponse> response;
    std::string error;

    bool ok() const { return response.has_value(); }
};

// Front door for every stage: retries with exponential backoff and jitter,
// bounds concurrent backend calls to max_in_flight, and serves batches with
// order-preserved results.
class Gateway {
public:
    // Builds the backend from cfg.mode when none is injected. Tests inject
    // custom backends; record/replay wrapping still applies around them.
    explicit Gateway(BackendConfig cfg, std::unique_ptr<Backend> backend = nullptr);

    ChatResponse complete(const ChatRequest& req);
    std::vector<CompletionOutcome> complete_batch(const std::vector<ChatRequest>& reqs);

    // One unit vector per input text, order preserved.
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);

    const BackendConfig& config() const { return cfg_; }

private:
    class Slot;
    void backoff_sleep(int attempt);

    BackendConfig cfg_;
    std::unique_ptr<Backend> backend_;
    std::mutex slot_mutex_;
    std::condition_variable slot_cv_;
    int slots_free_;
};

// Runs fn(item index) on `workers` threads over [0, n); exceptions propagate.
void parallel_for_index(std::size_t n, std::size_t workers,
                        const std::function<void(std::size_t)>& fn);

}  // namespace mathforge::llm
