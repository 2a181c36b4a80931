#pragma once

#include <string>

#include "mathforge/gateway.hpp"
#include "mathforge/parsers.hpp"

namespace mathforge {

// Parse retries get a fresh completion; the salt stride keeps each attempt's
// request (and recording key) distinct from the caller's other calls.
constexpr int kAttemptStride = 1;
constexpr int kSaltStride = 100;

template <typename T>
struct AgentCallResult {
    std::optional<T> value;
    std::string error;
    int attempts = 0;

    bool ok() const { return value.has_value(); }
};

// Issues the request and parses the reply; on parse failure re-samples with a
// bumped salt up to extra_attempts more times. Gateway errors (which the
// gateway already retried at transport level) end the call immediately.
template <typename T, typename Parser>
AgentCallResult<T> call_agent(llm::Gateway& gateway, llm::ChatRequest req, Parser parse,
                              int extra_attempts = 2) {
    AgentCallResult<T> result;
    const int base_salt = req.salt;
    for (int attempt = 0; attempt <= extra_attempts; ++attempt) {
        req.salt = base_salt + attempt * kAttemptStride;
        ++result.attempts;
        llm::ChatResponse resp;
        try {
            resp = gateway.complete(req);
        } catch (const llm::GatewayError& e) {
            result.error = std::string("gateway: ") + e.what();
            return result;
        }
        auto parsed = parse(resp.text);
        if (parsed.ok()) {
            result.value = std::move(*parsed.value);
            return result;
        }
        result.error = parsed.error;
    }
    return result;
}

}  // namespace mathforge
