#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mathforge/gateway.hpp"
#include "mathforge/text.hpp"

using namespace mathforge;
using namespace mathforge::llm;
using nlohmann::json;

namespace {

BackendConfig fast_config() {
    BackendConfig cfg;
    cfg.mode = BackendMode::mock;
    cfg.retry.max_attempts = 5;
    cfg.retry.base_backoff = std::chrono::milliseconds(1);
    cfg.embed_dim = 64;
    return cfg;
}

ChatRequest request(const std::string& tag, const std::string& user, int salt = 0) {
    ChatRequest req;
    req.tag = tag;
    req.user = user;
    req.salt = salt;
    return req;
}

// Counts calls and concurrency; optionally fails the first N calls.
class InstrumentedBackend : public Backend {
public:
    explicit InstrumentedBackend(int fail_first = 0,
                                 GatewayErrorKind kind = GatewayErrorKind::transport)
        : fail_first_(fail_first), kind_(kind) {}

    std::string id() const override { return "instrumented"; }

    ChatResponse complete(const ChatRequest& req) override {
        const int now = ++in_flight_;
        int seen = max_in_flight_.load();
        while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(3));
        --in_flight_;
        const int call = ++calls_;
        if (call <= fail_first_) throw GatewayError(kind_, "injected failure");
        ChatResponse resp;
        resp.text = "reply to " + req.tag + "#" + std::to_string(req.salt);
        resp.backend_id = id();
        return resp;
    }

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        HashingEmbedder embedder(32);
        std::vector<EmbeddingVector> out;
        for (const auto& t : texts) out.push_back(embedder.embed(t));
        return out;
    }

    std::atomic<int> calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    int fail_first_;
    GatewayErrorKind kind_;
};

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("agmtest-" +
                std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace

TEST_CASE("mock scripted responses are served per tag in order") {
    auto backend = std::make_unique<MockBackend>(16);
    backend->script("rating", "{\"fixed\": true}");
    Gateway gateway(fast_config(), std::move(backend));
    CHECK(gateway.complete(request("rating", "anything")).text == "{\"fixed\": true}");
    // Queue exhausted: falls through to the deterministic synthesizer.
    CHECK(gateway.complete(request("rating", "anything")).text.find("Complexity") !=
          std::string::npos);
}

TEST_CASE("mock synthesizer is deterministic and salt-sensitive") {
    Gateway a(fast_config());
    Gateway b(fast_config());
    const auto r1 = a.complete(request("review", "same prompt", 1)).text;
    const auto r2 = b.complete(request("review", "same prompt", 1)).text;
    CHECK(r1 == r2);
    CHECK(a.complete(request("review", "same prompt", 2)).text !=
          a.complete(request("review", "same prompt", 3)).text);
}

TEST_CASE("transient failures are retried with attempts counted") {
    auto backend = std::make_unique<InstrumentedBackend>(2);
    auto* raw = backend.get();
    Gateway gateway(fast_config(), std::move(backend));
    const auto resp = gateway.complete(request("rating", "q"));
    CHECK(resp.text.rfind("reply to rating", 0) == 0);
    CHECK(raw->calls_.load() == 3);
}

TEST_CASE("retry budget exhausts on persistent transport failure") {
    BackendConfig cfg = fast_config();
    cfg.retry.max_attempts = 3;
    auto backend = std::make_unique<InstrumentedBackend>(99);
    auto* raw = backend.get();
    Gateway gateway(cfg, std::move(backend));
    CHECK_THROWS_AS(gateway.complete(request("rating", "q")), GatewayError);
    CHECK(raw->calls_.load() == 3);
}

TEST_CASE("auth errors are not retried") {
    auto backend = std::make_unique<InstrumentedBackend>(99, GatewayErrorKind::auth);
    auto* raw = backend.get();
    Gateway gateway(fast_config(), std::move(backend));
    try {
        gateway.complete(request("rating", "q"));
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::auth);
    }
    CHECK(raw->calls_.load() == 1);
}

TEST_CASE("at most max_in_flight requests are outstanding") {
    BackendConfig cfg = fast_config();
    cfg.max_in_flight = 4;
    auto backend = std::make_unique<InstrumentedBackend>();
    auto* raw = backend.get();
    Gateway gateway(cfg, std::move(backend));

    std::vector<ChatRequest> reqs;
    for (int i = 0; i < 40; ++i) reqs.push_back(request("rating", "q", i));
    const auto outcomes = gateway.complete_batch(reqs);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        REQUIRE(outcomes[i].ok());
        // Order-preserved: slot i answers request i.
        CHECK(outcomes[i].response->text == "reply to rating#" + std::to_string(i));
    }
    CHECK(raw->max_in_flight_.load() <= 4);
    CHECK(raw->max_in_flight_.load() >= 2);
}

TEST_CASE("record then replay returns byte-identical responses") {
    TempDir tmp;
    BackendConfig cfg = fast_config();
    cfg.recordings_path = (tmp.path / "rec.jsonl").string();

    std::string live_text;
    std::vector<EmbeddingVector> live_vecs;
    {
        Gateway gateway(cfg, std::make_unique<MockBackend>(cfg.embed_dim));
        live_text = gateway.complete(request("rating", "record me", 7)).text;
        live_vecs = gateway.embed({"alpha beta", "gamma"});
    }

    BackendConfig replay_cfg = cfg;
    replay_cfg.mode = BackendMode::replay;
    Gateway replay(replay_cfg);
    CHECK(replay.complete(request("rating", "record me", 7)).text == live_text);
    const auto replay_vecs = replay.embed({"alpha beta", "gamma"});
    REQUIRE(replay_vecs.size() == live_vecs.size());
    for (std::size_t i = 0; i < live_vecs.size(); ++i)
        CHECK(replay_vecs[i].values == live_vecs[i].values);

    // A request that was never recorded is a distinct replay-miss error.
    try {
        replay.complete(request("rating", "never recorded", 3));
        FAIL("expected replay miss");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::replay_miss);
    }
}

TEST_CASE("replay keying is content-based, not order-based") {
    TempDir tmp;
    BackendConfig cfg = fast_config();
    cfg.recordings_path = (tmp.path / "rec.jsonl").string();
    {
        Gateway gateway(cfg, std::make_unique<MockBackend>(cfg.embed_dim));
        gateway.complete(request("rating", "first", 0));
        gateway.complete(request("review", "second", 0));
    }
    BackendConfig replay_cfg = cfg;
    replay_cfg.mode = BackendMode::replay;
    Gateway replay(replay_cfg);
    // Reverse order still hits.
    CHECK_NOTHROW(replay.complete(request("review", "second", 0)));
    CHECK_NOTHROW(replay.complete(request("rating", "first", 0)));
}

TEST_CASE("embeddings are unit-norm, deterministic, and order-preserving") {
    Gateway gateway(fast_config());
    const std::vector<std::string> texts = {"a cat sat on the mat", "a cat sat on the mat",
                                            "a cat ran past the mat"};
    const auto vecs = gateway.embed(texts);
    REQUIRE(vecs.size() == 3);
    for (const auto& v : vecs) CHECK(std::abs(v.norm() - 1.0) <= 1e-6);
    CHECK(vecs[0].values == vecs[1].values);
    CHECK(cosine(vecs[0], vecs[1]) == doctest::Approx(1.0));

    // Golden value frozen from the hashing embedder's own first run (dim 64).
    const double cross = cosine(vecs[0], vecs[2]);
    CHECK(cross == doctest::Approx(0.50251890762960605).epsilon(1e-12));

    CHECK_THROWS_AS(gateway.embed({}), GatewayError);
    CHECK_THROWS_AS(gateway.embed({"ok", ""}), GatewayError);
}

TEST_CASE("live HTTP backend speaks the chat-completions shape") {
    httplib::Server server;
    std::atomic<int> completion_hits{0};

    server.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    const int hit = ++completion_hits;
                    if (hit <= 2) {
                        res.status = 500;
                        return;
                    }
                    const json body = json::parse(req.body);
                    REQUIRE(body.at("model").get<std::string>() == "test-model");
                    REQUIRE(body.at("temperature").get<double>() == doctest::Approx(0.7));
                    REQUIRE(body.at("max_tokens").get<int>() == 4096);
                    const auto messages = body.at("messages");
                    REQUIRE(messages.size() == 1);
                    REQUIRE(messages[0].at("role").get<std::string>() == "user");
                    const json reply{
                        {"choices",
                         json::array(
                             {{{"message",
                                {{"role", "assistant"},
                                 {"content",
                                  "echo: " + messages[0].at("content").get<std::string>()}}}}})},
                        {"usage", {{"prompt_tokens", 5}, {"completion_tokens", 7}}}};
                    res.set_content(reply.dump(), "application/json");
                });
    server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        json data = json::array();
        for (std::size_t i = 0; i < body.at("input").size(); ++i)
            data.push_back({{"index", i}, {"embedding", {1.0, 2.0, 2.0}}});
        res.set_content(json{{"data", data}}.dump(), "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("TEST_LLM_KEY", "sk-test", 1);
    BackendConfig cfg = fast_config();
    cfg.mode = BackendMode::live;
    cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    cfg.model_name = "test-model";
    cfg.api_key_env = "TEST_LLM_KEY";
    Gateway gateway(cfg);

    // Two injected 500s then success: three attempts total.
    const auto resp = gateway.complete(request("rating", "hello"));
    CHECK(resp.text == "echo: hello");
    CHECK(resp.usage.completion_tokens == 7);
    CHECK(completion_hits.load() == 3);

    const auto vecs = gateway.embed({"x", "y"});
    REQUIRE(vecs.size() == 2);
    CHECK(vecs[0].norm() == doctest::Approx(1.0));  // gateway normalizes

    server.stop();
    server_thread.join();
}

TEST_CASE("live mode without an API key is a config error") {
    unsetenv("TEST_MISSING_KEY");
    BackendConfig cfg = fast_config();
    cfg.mode = BackendMode::live;
    cfg.endpoint_url = "http://127.0.0.1:1/v1";
    cfg.api_key_env = "TEST_MISSING_KEY";
    try {
        Gateway gateway(cfg);
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::config);
    }
}
