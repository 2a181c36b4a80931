#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mathforge {

// Where a seed question came from. The source decides which solver exemplar
// a question (and everything derived from it) uses.
enum class Source { gsm8k, math };

enum class Flavor { arithmetic_word, competition };

enum class Origin { seed, synthesized };

enum class CandidateStatus { pending, accepted, discarded };

inline Flavor flavor_for(Source s) {
    return s == Source::gsm8k ? Flavor::arithmetic_word : Flavor::competition;
}

const char* to_string(Source s);
const char* to_string(Flavor f);
const char* to_string(Origin o);
const char* to_string(CandidateStatus s);

Source source_from_string(const std::string& s);
Origin origin_from_string(const std::string& s);
CandidateStatus candidate_status_from_string(const std::string& s);

struct SeedProblem {
    std::string id;
    std::string text;
    Source source = Source::gsm8k;

    Flavor flavor() const { return flavor_for(source); }
};

// Judge ratings for one item. Raw values are on the scale the judge prompt
// declares (1-10 for seed rating, 1-5 for pair rating); overall_norm maps the
// overall onto the 0-5 scale every threshold in the pipeline uses.
struct ScoreReport {
    int complexity = 0;
    int info_value = 0;
    int clarity = 0;
    int overall_raw = 0;
    double overall_norm = 0.0;
    std::optional<double> curated;

    double mean_of_three() const { return (complexity + info_value + clarity) / 3.0; }
};

struct RephrasedProblem {
    std::string id;
    std::string parent_id;
    int variant_index = 0;
    std::string text;
    int revision_count = 0;
    CandidateStatus status = CandidateStatus::pending;
};

struct ReviewVerdict {
    int clarity_grammar = 0;
    int logic_completeness = 0;
    int validity_solvability = 0;
    double mean = 0.0;
    std::vector<std::string> suggestions;
    std::string thought;
};

inline ReviewVerdict make_verdict(int clarity_grammar, int logic_completeness,
                                  int validity_solvability) {
    ReviewVerdict v;
    v.clarity_grammar = clarity_grammar;
    v.logic_completeness = logic_completeness;
    v.validity_solvability = validity_solvability;
    v.mean = (clarity_grammar + logic_completeness + validity_solvability) / 3.0;
    return v;
}

struct SolutionRecord {
    std::string question_id;
    std::string thought;
    std::string answer;
    int sample_index = 0;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    double norm() const;
    // Scales to unit Euclidean norm. Throws std::domain_error on the zero vector.
    void normalize();
};

// Cosine similarity of two unit(ish) vectors. Throws std::invalid_argument on
// dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct TrainingPair {
    std::string id;
    std::string question;
    std::string solution;
    Origin origin = Origin::seed;
    // Ancestor ids, most recent first. For synthesized pairs the list is
    // non-empty and ends at a seed problem id.
    std::vector<std::string> lineage;
    int sample_index = 0;
};

}  // namespace mathforge
