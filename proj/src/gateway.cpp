#include "mathforge/gateway.hpp"

#include <atomic>
#include <chrono>
#include <random>
#include <thread>

#include "mathforge/text.hpp"

namespace mathforge::llm {

using nlohmann::json;

BackendMode backend_mode_from_string(const std::string& s) {
    if (s == "live") return BackendMode::live;
    if (s == "replay") return BackendMode::replay;
    if (s == "mock") return BackendMode::mock;
    throw std::invalid_argument("unknown backend mode: " + s);
}

const char* to_string(BackendMode m) {
    switch (m) {
        case BackendMode::live: return "live";
        case BackendMode::replay: return "replay";
        case BackendMode::mock: return "mock";
    }
    return "mock";
}

json chat_request_to_json(const ChatRequest& req) {
    json j{{"user", req.user},
           {"temperature", req.temperature},
           {"max_tokens", req.max_tokens},
           {"tag", req.tag},
           {"salt", req.salt}};
    if (req.system) j["system"] = *req.system;
    return j;
}

std::string chat_request_key(const ChatRequest& req) {
    return "chat:" + req.tag + ":" + digest_hex(chat_request_to_json(req).dump());
}

std::string embedding_key(const std::string& model, int dim, const std::string& text) {
    return "embed:" + std::to_string(dim) + ":" +
           digest_hex(model + '\x1f' + text);
}

// ---------------------------------------------------------------------------
// RecordingStore

RecordingStore::RecordingStore(std::filesystem::path path, bool writable)
    : path_(std::move(path)) {
    std::ifstream in(path_);
    if (in) {
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("key") || !j.contains("response"))
                throw GatewayError(GatewayErrorKind::config,
                                   "malformed recording at " + path_.string() + ":" +
                                       std::to_string(lineno));
            responses_.emplace(j["key"].get<std::string>(), j["response"]);
        }
    }
    if (writable) {
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
        out_.open(path_, std::ios::app);
        if (!out_)
            throw GatewayError(GatewayErrorKind::config,
                               "cannot open recordings file " + path_.string());
    }
}

std::optional<json> RecordingStore::find(const std::string& key) const {
    std::lock_guard lock(mutex_);
    const auto it = responses_.find(key);
    if (it == responses_.end()) return std::nullopt;
    return it->second;
}

void RecordingStore::append(const std::string& key, json request, json response) {
    std::lock_guard lock(mutex_);
    if (!responses_.emplace(key, response).second) return;  // first recording wins
    if (!out_.is_open()) return;
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    json line{{"key", key},
              {"request", std::move(request)},
              {"response", std::move(response)},
              {"timestamp", now}};
    out_ << line.dump() << '\n';
    out_.flush();
}

std::size_t RecordingStore::size() const {
    std::lock_guard lock(mutex_);
    return responses_.size();
}

// ---------------------------------------------------------------------------
// ReplayBackend

ReplayBackend::ReplayBackend(std::shared_ptr<RecordingStore> store, int embed_dim)
    : store_(std::move(store)), embed_dim_(embed_dim) {}

ChatResponse ReplayBackend::complete(const ChatRequest& req) {
    const std::string key = chat_request_key(req);
    const auto rec = store_->find(key);
    if (!rec)
        throw GatewayError(GatewayErrorKind::replay_miss,
                           "no recording for key " + key + " (tag '" + req.tag + "')");
    ChatResponse resp;
    resp.text = (*rec).value("text", std::string{});
    resp.usage.prompt_tokens = (*rec).value("prompt_tokens", 0);
    resp.usage.completion_tokens = (*rec).value("completion_tokens", 0);
    resp.backend_id = "replay";
    return resp;
}

std::vector<EmbeddingVector> ReplayBackend::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        const std::string key = embedding_key(embed_model_, embed_dim_, text);
        const auto rec = store_->find(key);
        if (!rec)
            throw GatewayError(GatewayErrorKind::replay_miss,
                               "no embedding recording for key " + key);
        EmbeddingVector v;
        v.values = (*rec)["values"].get<std::vector<double>>();
        out.push_back(std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------------------
// RecordingBackend

RecordingBackend::RecordingBackend(std::unique_ptr<Backend> inner,
                                   std::shared_ptr<RecordingStore> store,
                                   std::string embed_model, int embed_dim)
    : inner_(std::move(inner)),
      store_(std::move(store)),
      embed_model_(std::move(embed_model)),
      embed_dim_(embed_dim) {}

ChatResponse RecordingBackend::complete(const ChatRequest& req) {
    ChatResponse resp = inner_->complete(req);
    store_->append(chat_request_key(req), chat_request_to_json(req),
                   json{{"text", resp.text},
                        {"prompt_tokens", resp.usage.prompt_tokens},
                        {"completion_tokens", resp.usage.completion_tokens}});
    return resp;
}

std::vector<EmbeddingVector> RecordingBackend::embed(const std::vector<std::string>& texts) {
    auto out = inner_->embed(texts);
    for (std::size_t i = 0; i < texts.size() && i < out.size(); ++i) {
        store_->append(embedding_key(embed_model_, embed_dim_, texts[i]),
                       json{{"model", embed_model_}, {"input", texts[i]}},
                       json{{"values", out[i].values}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gateway

namespace {

bool retryable(GatewayErrorKind kind) {
    return kind == GatewayErrorKind::transport || kind == GatewayErrorKind::quota;
}

constexpr std::size_t kEmbedBatch = 64;

}  // namespace

class Gateway::Slot {
public:
    Slot(std::mutex& m, std::condition_variable& cv, int& free) : m_(m), cv_(cv), free_(free) {
        std::unique_lock lock(m_);
        cv_.wait(lock, [&] { return free_ > 0; });
        --free_;
    }
    ~Slot() {
        {
            std::lock_guard lock(m_);
            ++free_;
        }
        cv_.notify_one();
    }

private:
    std::mutex& m_;
    std::condition_variable& cv_;
    int& free_;
};

Gateway::Gateway(BackendConfig cfg, std::unique_ptr<Backend> backend)
    : cfg_(std::move(cfg)), slots_free_(cfg_.max_in_flight) {
    if (cfg_.max_in_flight < 1)
        throw GatewayError(GatewayErrorKind::config, "max_in_flight must be positive");

    if (backend) {
        backend_ = std::move(backend);
    } else {
        switch (cfg_.mode) {
            case BackendMode::mock:
                backend_ = std::make_unique<MockBackend>(cfg_.embed_dim);
                break;
            case BackendMode::replay: {
                if (cfg_.recordings_path.empty())
                    throw GatewayError(GatewayErrorKind::config,
                                       "replay mode requires a recordings path");
                auto store = std::make_shared<RecordingStore>(cfg_.recordings_path, false);
                auto replay = std::make_unique<ReplayBackend>(store, cfg_.embed_dim);
                replay->set_embed_model(cfg_.embed_model_name);
                backend_ = std::move(replay);
                break;
            }
            case BackendMode::live:
                backend_ = make_http_backend(cfg_);
                break;
        }
    }

    // Any non-replay backend records when a recordings path is configured.
    if (!cfg_.recordings_path.empty() && cfg_.mode != BackendMode::replay) {
        auto store = std::make_shared<RecordingStore>(cfg_.recordings_path, true);
        backend_ = std::make_unique<RecordingBackend>(std::move(backend_), store,
                                                      cfg_.embed_model_name, cfg_.embed_dim);
    }
}

void Gateway::backoff_sleep(int attempt) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    std::uniform_real_distribution<double> jitter(0.8, 1.2);
    const double factor = static_cast<double>(1ull << (attempt - 1));
    const auto base = static_cast<double>(cfg_.retry.base_backoff.count());
    const auto ms = static_cast<std::int64_t>(base * factor * jitter(rng));
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

ChatResponse Gateway::complete(const ChatRequest& req) {
    if (req.temperature < 0.0 || req.temperature > 2.0)
        throw GatewayError(GatewayErrorKind::config, "temperature outside [0,2]");
    if (req.max_tokens <= 0)
        throw GatewayError(GatewayErrorKind::config, "max_tokens must be positive");

    const int max_attempts = std::max(1, cfg_.retry.max_attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            Slot slot(slot_mutex_, slot_cv_, slots_free_);
            return backend_->complete(req);
        } catch (const GatewayError& e) {
            if (!retryable(e.kind()) || attempt >= max_attempts) throw;
        }
        backoff_sleep(attempt);
    }
}

std::vector<CompletionOutcome> Gateway::complete_batch(const std::vector<ChatRequest>& reqs) {
    std::vector<CompletionOutcome> out(reqs.size());
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(cfg_.max_in_flight), reqs.size());
    parallel_for_index(reqs.size(), workers, [&](std::size_t i) {
        try {
            out[i].response = complete(reqs[i]);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts) {
    if (texts.empty())
        throw GatewayError(GatewayErrorKind::internal, "embed called with no texts");
    for (const auto& t : texts)
        if (t.empty())
            throw GatewayError(GatewayErrorKind::internal, "embed called with an empty text");

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += kEmbedBatch) {
        const std::size_t end = std::min(texts.size(), begin + kEmbedBatch);
        std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<EmbeddingVector> part;
        const int max_attempts = std::max(1, cfg_.retry.max_attempts);
        for (int attempt = 1;; ++attempt) {
            try {
                Slot slot(slot_mutex_, slot_cv_, slots_free_);
                part = backend_->embed(chunk);
                break;
            } catch (const GatewayError& e) {
                if (!retryable(e.kind()) || attempt >= max_attempts) throw;
            }
            backoff_sleep(attempt);
        }
        if (part.size() != chunk.size())
            throw GatewayError(GatewayErrorKind::internal, "embedding count mismatch");
        for (auto& v : part) {
            if (!out.empty() && v.dim() != out.front().dim())
                throw GatewayError(GatewayErrorKind::internal,
                                   "embedding dimension mismatch within batch");
            v.normalize();
            out.push_back(std::move(v));
        }
    }
    return out;
}

void parallel_for_index(std::size_t n, std::size_t workers,
                        const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(body);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mathforge::llm
