#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "planet/signatures.hpp"
#include "planet/synthetic.hpp"
#include "planet/text.hpp"
#include "planet/training.hpp"

namespace planet::testing {

struct SyntheticSetup {
    data::SyntheticCorpus corpus;
    data::Vocabulary vocab;
    model::ModelConfig model;
    train::Dataset dataset;
    std::unordered_map<std::string, std::vector<double>> signatures;
};

inline SyntheticSetup synthetic_setup(std::size_t n, std::uint64_t seed, std::size_t dim = 16) {
    SyntheticSetup s;
    s.corpus = data::make_synthetic(n, seed);
    std::vector<std::string> texts;
    for (const auto& sample : s.corpus.samples) texts.push_back(sample.text);
    s.vocab = data::build_vocab(texts);
    const sig::SignatureConfig sig_cfg;
    for (std::size_t i = 0; i < n; ++i)
        s.signatures[s.corpus.samples[i].id] = sig::mine_signature(s.corpus.images[i], sig_cfg).combined;
    s.model.dim = dim;
    s.model.vocab_size = s.vocab.size();
    s.model.match_signatures(sig_cfg);
    s.dataset = train::make_dataset(s.corpus.samples, s.corpus.images, s.signatures, sig_cfg, s.vocab, s.model);
    return s;
}

}  // namespace planet::testing
