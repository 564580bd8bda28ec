#pragma once

#include "kypher/schema.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kypher {

// Knobs for the synthetic Wikidata-like corpus. Identical spec -> identical
// bytes, across runs and platforms.
struct CorpusSpec {
    std::uint64_t seed = 1;
    std::uint64_t persons = 1000;
    std::uint64_t classes = 100;
    std::uint64_t publications = 500;
    std::uint64_t max_authors_per_pub = 3;
    double identifier_coverage = 0.7;    // ULAN holders that also get a VIAF id
    double noisy_literal_fraction = 0.4; // infobox spouse values that are literals
};

// Writes p31.tsv, p279.tsv, items.tsv, labels.tsv, external_ids.tsv,
// infobox.tsv, ulan.tsv and time.tsv under out_dir and returns their paths.
// The class graph under P279 is a DAG rooted at Q35120.
std::vector<std::string> generate_corpus(const CorpusSpec& spec, const std::string& out_dir);

// Materializes the reflexive-transitive closure of the subclass edges in
// p279_file as P279star edges (one (c, P279star, ancestor-or-self) row per
// pair). Rejects cyclic inputs naming a cycle member. Returns the closure
// edge count.
std::uint64_t closure_p279star(const std::string& p279_file, const std::string& out_file);

} // namespace kypher
