#include "mathforge/types.hpp"

#include <cmath>

namespace mathforge {

const char* to_string(Source s) {
    return s == Source::gsm8k ? "GSM8K" : "MATH";
}

const char* to_string(Flavor f) {
    return f == Flavor::arithmetic_word ? "arithmetic-word" : "competition";
}

const char* to_string(Origin o) {
    return o == Origin::seed ? "seed" : "synthesized";
}

const char* to_string(CandidateStatus s) {
    switch (s) {
        case CandidateStatus::pending: return "pending";
        case CandidateStatus::accepted: return "accepted";
        case CandidateStatus::discarded: return "discarded";
    }
    return "pending";
}

Source source_from_string(const std::string& s) {
    if (s == "GSM8K") return Source::gsm8k;
    if (s == "MATH") return Source::math;
    throw std::invalid_argument("unknown source: " + s);
}

Origin origin_from_string(const std::string& s) {
    if (s == "seed") return Origin::seed;
    if (s == "synthesized") return Origin::synthesized;
    throw std::invalid_argument("unknown origin: " + s);
}

CandidateStatus candidate_status_from_string(const std::string& s) {
    if (s == "pending") return CandidateStatus::pending;
    if (s == "accepted") return CandidateStatus::accepted;
    if (s == "discarded") return CandidateStatus::discarded;
    throw std::invalid_argument("unknown candidate status: " + s);
}

double EmbeddingVector::norm() const {
    double acc = 0.0;
    for (double v : values) acc += v * v;
    return std::sqrt(acc);
}

void EmbeddingVector::normalize() {
    const double n = norm();
    if (n == 0.0) throw std::domain_error("cannot normalize a zero vector");
    for (double& v : values) v /= n;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("embedding dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) acc += a.values[i] * b.values[i];
    return acc;
}

}  // namespace mathforge
