#pragma once

#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "planet/model.hpp"
#include "planet/signatures.hpp"
#include "planet/training.hpp"

namespace planet::cli {

/// Every tunable of a run, resolved from a flat JSON config plus overrides.
struct RunConfig {
    sig::SignatureConfig signature;
    model::ModelConfig model;  // vocab_size is filled in by training
    train::TrainConfig train;
    std::size_t min_count = 1;
    std::optional<std::string> holdout;

    nlohmann::json to_json() const;
    /// Applies the keys of a flat object; unknown keys raise ConfigError.
    void apply(const nlohmann::json& flat);
    /// Applies one "key=value" override; the value is parsed as JSON when
    /// possible and taken as a string otherwise.
    void apply_override(const std::string& assignment);
    void validate() const;

    static RunConfig load(const std::string& path);
};

/// Keys that distinguish ablation variants of one experiment.
bool is_ablation_key(const std::string& key);

/// Exit status for an exception: 1 usage, 2 data or validation, 3 numeric.
int exit_code(const std::exception& e);

/// Runs one invocation of the command-line tool.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace planet::cli
