// OpenAI-compatible HTTP backend: POST {base}/chat/completions and
// {base}/embeddings with bearer auth from the configured environment variable.

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "mathforge/gateway.hpp"

namespace mathforge::llm {

using nlohmann::json;

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // path prefix, e.g. /v1
};

ParsedUrl parse_endpoint(const std::string& url) {
    const std::size_t scheme = url.find("://");
    if (scheme == std::string::npos)
        throw GatewayError(GatewayErrorKind::config, "endpoint_url must include a scheme: " + url);
    const std::size_t path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string path = url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {url.substr(0, path_start), path};
}

class HttpBackend : public Backend {
public:
    explicit HttpBackend(const BackendConfig& cfg)
        : cfg_(cfg), url_(parse_endpoint(cfg.endpoint_url)) {
        const char* key = std::getenv(cfg.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw GatewayError(GatewayErrorKind::config,
                               "live mode requires the API key environment variable " +
                                   cfg.api_key_env + " to be set");
        api_key_ = key;
    }

    std::string id() const override { return "http:" + cfg_.model_name; }

    ChatResponse complete(const ChatRequest& req) override {
        json messages = json::array();
        if (req.system)
            messages.push_back({{"role", "system"}, {"content", *req.system}});
        messages.push_back({{"role", "user"}, {"content", req.user}});
        const json body{{"model", cfg_.model_name},
                        {"messages", messages},
                        {"temperature", req.temperature},
                        {"max_tokens", req.max_tokens}};

        const json reply = post(url_.path + "/chat/completions", body);
        try {
            ChatResponse resp;
            resp.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
            if (reply.contains("usage")) {
                resp.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
                resp.usage.completion_tokens = reply["usage"].value("completion_tokens", 0);
            }
            resp.backend_id = id();
            return resp;
        } catch (const json::exception& e) {
            throw GatewayError(GatewayErrorKind::transport,
                               std::string("malformed completion response: ") + e.what());
        }
    }

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        const json body{{"model", cfg_.embed_model_name}, {"input", texts}};
        const json reply = post(url_.path + "/embeddings", body);
        try {
            std::vector<EmbeddingVector> out(texts.size());
            for (const auto& item : reply.at("data")) {
                const auto idx = item.at("index").get<std::size_t>();
                if (idx >= out.size())
                    throw GatewayError(GatewayErrorKind::transport,
                                       "embedding index out of range");
                out[idx].values = item.at("embedding").get<std::vector<double>>();
            }
            return out;
        } catch (const json::exception& e) {
            throw GatewayError(GatewayErrorKind::transport,
                               std::string("malformed embedding response: ") + e.what());
        }
    }

private:
    json post(const std::string& path, const json& body) {
        httplib::Client client(url_.base);
        client.set_connection_timeout(30);
        client.set_read_timeout(300);
        client.set_bearer_token_auth(api_key_);

        const auto result = client.Post(path, body.dump(), "application/json");
        if (!result)
            throw GatewayError(GatewayErrorKind::transport,
                               "request to " + url_.base + path + " failed: " +
                                   httplib::to_string(result.error()));
        if (result->status == 401 || result->status == 403)
            throw GatewayError(GatewayErrorKind::auth,
                               "authentication rejected (" + std::to_string(result->status) + ")");
        if (result->status == 429)
            throw GatewayError(GatewayErrorKind::quota, "rate limited (429)");
        if (result->status < 200 || result->status >= 300)
            throw GatewayError(GatewayErrorKind::transport,
                               "HTTP " + std::to_string(result->status) + " from " + path);

        json reply = json::parse(result->body, nullptr, false);
        if (reply.is_discarded())
            throw GatewayError(GatewayErrorKind::transport, "response body is not JSON");
        return reply;
    }

    BackendConfig cfg_;
    ParsedUrl url_;
    std::string api_key_;
};

}  // namespace

std::unique_ptr<Backend> make_http_backend(const BackendConfig& cfg) {
    return std::make_unique<HttpBackend>(cfg);
}

}  // namespace mathforge::llm
