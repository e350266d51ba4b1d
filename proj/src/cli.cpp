#include "planet/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "planet/binary_io.hpp"
#include "planet/errors.hpp"
#include "planet/manifest.hpp"
#include "planet/ppm.hpp"
#include "planet/retrieval.hpp"
#include "planet/signature_cache.hpp"
#include "planet/synthetic.hpp"

namespace planet::cli {

using nlohmann::json;

json RunConfig::to_json() const {
    const auto& t = train;
    return json{{"color_bins", signature.color_bins},
                {"struct_bins", signature.struct_bins},
                {"texture_bins", signature.texture_bins},
                {"tau_rel", signature.tau_rel},
                {"dim", model.dim},
                {"max_len", model.max_len},
                {"grid", model.grid},
                {"patch_cells", model.patch_cells},
                {"init_tau", model.init_tau},
                {"init_tau_p", model.init_tau_p},
                {"lambda", t.loss.lambda},
                {"w_color", t.loss.branch_weights[0]},
                {"w_struc", t.loss.branch_weights[1]},
                {"w_tex", t.loss.branch_weights[2]},
                {"symmetric_itc", t.loss.symmetric_itc},
                {"learn_tau_p", t.loss.learn_tau_p},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"lr", t.lr},
                {"min_lr", t.min_lr},
                {"seed", t.seed},
                {"checkpoint_every", t.checkpoint_every},
                {"warmup_steps", t.warmup_steps},
                {"weight_decay", t.weight_decay},
                {"grad_clip", t.grad_clip},
                {"min_count", min_count},
                {"holdout", holdout ? json(*holdout) : json(nullptr)}};
}

namespace {

template <typename T>
void take(const json& v, const std::string& key, T& dst) {
    try {
        dst = v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
    }
}

void take_count(const json& v, const std::string& key, std::size_t& dst) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("config key '" + key + "' must be a non-negative integer, got " + v.dump());
    dst = v.get<std::size_t>();
}

}  // namespace

void RunConfig::apply(const json& flat) {
    if (!flat.is_object()) throw ConfigError("config must be a flat JSON object");
    auto& t = train;
    for (const auto& [key, v] : flat.items()) {
        if (key == "color_bins") take_count(v, key, signature.color_bins);
        else if (key == "struct_bins") take_count(v, key, signature.struct_bins);
        else if (key == "texture_bins") take_count(v, key, signature.texture_bins);
        else if (key == "tau_rel") take(v, key, signature.tau_rel);
        else if (key == "dim") take_count(v, key, model.dim);
        else if (key == "max_len") take_count(v, key, model.max_len);
        else if (key == "grid") take_count(v, key, model.grid);
        else if (key == "patch_cells") take_count(v, key, model.patch_cells);
        else if (key == "init_tau") take(v, key, model.init_tau);
        else if (key == "init_tau_p") take(v, key, model.init_tau_p);
        else if (key == "lambda") take(v, key, t.loss.lambda);
        else if (key == "w_color") take(v, key, t.loss.branch_weights[0]);
        else if (key == "w_struc") take(v, key, t.loss.branch_weights[1]);
        else if (key == "w_tex") take(v, key, t.loss.branch_weights[2]);
        else if (key == "symmetric_itc") take(v, key, t.loss.symmetric_itc);
        else if (key == "learn_tau_p") take(v, key, t.loss.learn_tau_p);
        else if (key == "epochs") take_count(v, key, t.epochs);
        else if (key == "batch_size") take_count(v, key, t.batch_size);
        else if (key == "lr") take(v, key, t.lr);
        else if (key == "min_lr") take(v, key, t.min_lr);
        else if (key == "seed") {
            if (!v.is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
            t.seed = v.get<std::uint64_t>();
        } else if (key == "checkpoint_every") take_count(v, key, t.checkpoint_every);
        else if (key == "warmup_steps") take_count(v, key, t.warmup_steps);
        else if (key == "weight_decay") take(v, key, t.weight_decay);
        else if (key == "grad_clip") take(v, key, t.grad_clip);
        else if (key == "min_count") take_count(v, key, min_count);
        else if (key == "holdout") {
            if (v.is_null()) holdout.reset();
            else {
                std::string s;
                take(v, key, s);
                holdout = s;
            }
        } else throw ConfigError("unknown config key '" + key + "'");
    }
}

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("override must look like key=value: '" + assignment + "'");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    apply(json{{key, value}});
}

void RunConfig::validate() const {
    signature.validate();
    if (model.dim < 8) throw ConfigError("dim must be at least 8");
    if (model.max_len < 1 || model.grid < 1 || model.patch_cells < 1) throw ConfigError("model sizes must be positive");
    if (!(model.init_tau > 0.0) || !(model.init_tau_p > 0.0)) throw ConfigError("temperatures must be positive");
    train.validate();
    if (min_count < 1) throw ConfigError("min_count must be at least 1");
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError("config " + path + " is not valid JSON");
    RunConfig c;
    c.apply(j);
    return c;
}

bool is_ablation_key(const std::string& key) {
    return key == "lambda" || key == "w_color" || key == "w_struc" || key == "w_tex" || key == "seed";
}

int exit_code(const std::exception& e) {
    if (const auto* pe = dynamic_cast<const Error*>(&e)) {
        switch (pe->category()) {
            case Error::Category::Usage: return 1;
            case Error::Category::Data: return 2;
            case Error::Category::Numeric: return 3;
        }
    }
    if (dynamic_cast<const CLI::Error*>(&e) != nullptr) return 1;
    return 2;
}

namespace {

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

struct ConfigArgs {
    std::string config_path;
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat JSON run configuration");
        cmd->add_option("--set", overrides, "override one config key (key=value), repeatable");
    }

    RunConfig resolve() const {
        RunConfig c = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        for (const auto& o : overrides) c.apply_override(o);
        return c;
    }
};

std::vector<Image> load_images(const data::Manifest& m, const std::vector<data::Sample>& samples) {
    std::vector<Image> images;
    images.reserve(samples.size());
    for (const auto& s : samples) {
        try {
            images.push_back(data::read_ppm(m.image_path(s)));
        } catch (const Error& e) {
            throw DataError("image for '" + s.id + "': " + e.what());
        }
    }
    return images;
}

int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out_dir, std::size_t regions, std::ostream& out) {
    data::SyntheticOptions opt;
    opt.regions = regions;
    const auto corpus = data::generate_synthetic(n, seed, out_dir, opt);
    std::size_t train = 0;
    for (const auto& s : corpus.samples) train += *s.split == data::Split::Train;
    out << "wrote " << corpus.samples.size() << " samples (" << train << " train, " << corpus.samples.size() - train
        << " test) to " << out_dir << "\n";
    return 0;
}

int cmd_extract(const std::string& manifest_path, const std::string& out_path, const RunConfig& cfg, std::ostream& out) {
    cfg.signature.validate();
    const data::Manifest m = data::load_manifest(manifest_path);
    std::vector<data::CacheEntry> entries;
    entries.reserve(m.samples.size());
    for (const auto& s : m.samples) {
        Image img;
        try {
            img = data::read_ppm(m.image_path(s));
        } catch (const Error& e) {
            throw DataError("image for '" + s.id + "': " + e.what());
        }
        entries.push_back({s.id, sig::mine_signature(img, cfg.signature).combined});
    }
    data::write_signature_cache(out_path, cfg.signature, entries);
    out << "wrote " << entries.size() << " signatures of length " << cfg.signature.dim() << " to " << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& manifest_path, const std::string& cache_path, const std::string& out_dir,
              RunConfig cfg, std::ostream& out) {
    cfg.validate();
    const data::Manifest m = data::load_manifest(manifest_path);
    if (!m.fully_split()) throw ValidationError("manifest samples need split labels before training");
    const auto cache = data::index_cache(data::read_signature_cache(cache_path, cfg.signature));

    std::vector<data::Sample> samples;
    for (const auto& s : m.samples)
        if (*s.split == data::Split::Train && (!cfg.holdout || s.region != *cfg.holdout)) samples.push_back(s);
    if (samples.empty()) throw ValidationError("no training samples after applying split and holdout");
    std::vector<std::string> texts;
    for (const auto& s : samples) texts.push_back(s.text);
    const data::Vocabulary vocab = data::build_vocab(texts, cfg.min_count);

    model::ModelConfig mc = cfg.model;
    mc.vocab_size = vocab.size();
    mc.match_signatures(cfg.signature);
    const train::Dataset ds = train::make_dataset(samples, load_images(m, samples), cache, cfg.signature, vocab, mc);

    ensure_dir(out_dir);
    const std::filesystem::path dir(out_dir);
    const json resolved = cfg.to_json();
    write_text(dir / "config.json", resolved.dump(2) + "\n");
    std::string metrics_text;
    auto make_ckpt = [&](const model::ModelParams& p) {
        return model::Checkpoint{p, vocab, cfg.signature, resolved};
    };
    const auto result = train::train(ds, mc, cfg.train, [&](const train::EpochMetrics& em, const model::ModelParams& p) {
        metrics_text += train::format_metrics_line(em) + "\n";
        if (cfg.train.checkpoint_every > 0 && em.epoch % cfg.train.checkpoint_every == 0 && em.epoch < cfg.train.epochs) {
            std::ostringstream name;
            name << "checkpoint_epoch" << std::setw(3) << std::setfill('0') << em.epoch << ".plnt";
            model::save_checkpoint(make_ckpt(p), dir / name.str());
        }
    });
    write_text(dir / "metrics.jsonl", metrics_text);
    const auto bytes = model::encode_checkpoint(make_ckpt(result.params));
    write_file(dir / "checkpoint.plnt", bytes);
    const auto& last = result.metrics.back();
    out << "trained " << ds.size() << " pairs for " << cfg.train.epochs << " epochs; final loss " << last.loss.total
        << "\ncheckpoint " << (dir / "checkpoint.plnt").string() << " hash " << hex64(model::checkpoint_hash(bytes))
        << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& manifest_path, const std::string& mode,
             const std::string& holdout, const std::string& format, const std::string& out_path,
             std::size_t max_queries, const std::vector<double>& distances, std::ostream& out) {
    const model::Checkpoint ckpt = model::load_checkpoint(ckpt_path);
    const data::Manifest m = data::load_manifest(manifest_path);
    eval::EvalSpec spec;
    if (!holdout.empty()) spec.holdout = holdout;
    else if (ckpt.run_config.contains("holdout") && ckpt.run_config["holdout"].is_string())
        spec.holdout = ckpt.run_config["holdout"].get<std::string>();
    if (mode.empty()) spec.mode = holdout.empty() ? eval::EvalMode::InDomain : eval::EvalMode::CrossDomain;
    else if (mode == "in-domain") spec.mode = eval::EvalMode::InDomain;
    else if (mode == "cross-domain") spec.mode = eval::EvalMode::CrossDomain;
    else if (mode == "train") spec.mode = eval::EvalMode::Train;
    else throw UsageError("unknown evaluation mode '" + mode + "'");
    spec.max_queries = max_queries;
    if (!distances.empty()) spec.distances = distances;

    const eval::EvalReport report = eval::evaluate(ckpt, m, spec);
    const std::string text = format == "json" ? report.to_json().dump(2) + "\n" : report.to_table();
    if (out_path.empty()) out << text;
    else write_text(out_path, text);
    return 0;
}

struct RunSummary {
    std::string name;
    json config;
    train::EpochMetrics last;
};

RunSummary summarize_log(const std::string& path) {
    std::istringstream in(read_text(path));
    RunSummary r;
    r.name = path;
    std::string line;
    std::size_t lineno = 0, records = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw ParseError(path + ":" + std::to_string(lineno) + ": not a JSON record");
        try {
            r.last.epoch = j.at("epoch").get<std::size_t>();
            r.last.lr = j.at("lr").get<double>();
            r.last.loss.total = j.at("loss_total").get<double>();
            r.last.loss.itc = j.at("loss_itc").get<double>();
            r.last.loss.phy = {j.at("loss_color").get<double>(), j.at("loss_struc").get<double>(),
                               j.at("loss_tex").get<double>()};
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        ++records;
    }
    if (records == 0) throw ValidationError(path + ": metrics log has no records");
    const auto cfg_path = std::filesystem::path(path).parent_path() / "config.json";
    if (std::filesystem::exists(cfg_path)) {
        r.config = json::parse(read_text(cfg_path), nullptr, false);
        if (r.config.is_discarded()) throw ParseError(cfg_path.string() + " is not valid JSON");
    }
    return r;
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

std::string signed_fmt(double v) { return (v >= 0 ? "+" : "") + fmt(v); }

int cmd_report(const std::vector<std::string>& logs, const std::string& out_path, std::ostream& out) {
    if (logs.empty()) throw UsageError("report needs at least one metrics log");
    std::vector<RunSummary> runs;
    for (const auto& p : logs) runs.push_back(summarize_log(p));

    // configs are compared on everything except the ablation knobs
    auto base_keys = [](const json& c) {
        json k = json::object();
        if (c.is_object())
            for (const auto& [key, v] : c.items())
                if (!is_ablation_key(key)) k[key] = v;
        return k;
    };
    const json reference = base_keys(runs.front().config);

    std::vector<std::string> header{"run", "lambda", "w_c/w_s/w_t", "epochs", "loss_total", "loss_itc",
                                    "loss_color", "loss_struc", "loss_tex", "d_total", "d_itc", "warning"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : runs) {
        const json& c = r.config;
        auto num = [&](const char* key) { return c.is_object() && c.contains(key) ? fmt(c[key].get<double>(), 3) : "?"; };
        std::string warning;
        if (!c.is_object()) warning = "no-config";
        else if (base_keys(c) != reference) warning = "config-mismatch";
        rows.push_back({r.name, num("lambda"), num("w_color") + "/" + num("w_struc") + "/" + num("w_tex"),
                        std::to_string(r.last.epoch), fmt(r.last.loss.total), fmt(r.last.loss.itc),
                        fmt(r.last.loss.phy[0]), fmt(r.last.loss.phy[1]), fmt(r.last.loss.phy[2]),
                        signed_fmt(r.last.loss.total - runs.front().last.loss.total),
                        signed_fmt(r.last.loss.itc - runs.front().last.loss.itc), warning.empty() ? "-" : warning});
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream os;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << "  ";
            if (c + 1 == row.size()) os << row[c];
            else
                os << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[c])) << row[c];
        }
        os << "\n";
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    if (out_path.empty()) out << os.str();
    else write_text(out_path, os.str());
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"planet: text-to-aerial-image geo-localization with physical signature supervision"};
    app.require_subcommand(1);

    std::size_t synth_n = 0, synth_regions = 4;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "generate a synthetic geo-tagged corpus");
    synth->add_option("--n", synth_n, "number of samples")->required();
    synth->add_option("--seed", synth_seed, "corpus seed");
    synth->add_option("--regions", synth_regions, "number of geographic subsets");
    synth->add_option("--out", synth_out, "output directory")->required();

    std::string ex_manifest, ex_out;
    ConfigArgs ex_cfg;
    auto* extract = app.add_subcommand("extract", "mine physical signatures into a cache");
    extract->add_option("--manifest", ex_manifest, "manifest.jsonl")->required();
    extract->add_option("--out", ex_out, "signature cache path")->required();
    ex_cfg.attach(extract);

    std::string tr_manifest, tr_cache, tr_out, tr_holdout;
    ConfigArgs tr_cfg;
    std::optional<double> tr_lambda, tr_lr;
    std::optional<std::uint64_t> tr_seed;
    std::optional<std::size_t> tr_epochs, tr_batch;
    auto* trn = app.add_subcommand("train", "optimise the total loss");
    trn->add_option("--manifest", tr_manifest, "manifest.jsonl")->required();
    trn->add_option("--cache", tr_cache, "signature cache")->required();
    trn->add_option("--out", tr_out, "run directory")->required();
    trn->add_option("--lambda", tr_lambda, "weight of the physical consistency loss");
    trn->add_option("--seed", tr_seed, "initialisation and shuffling seed");
    trn->add_option("--epochs", tr_epochs, "training epochs");
    trn->add_option("--lr", tr_lr, "initial learning rate");
    trn->add_option("--batch-size", tr_batch, "pairs per batch");
    trn->add_option("--holdout", tr_holdout, "region excluded from training");
    tr_cfg.attach(trn);

    std::string ev_ckpt, ev_manifest, ev_mode, ev_holdout, ev_format = "table", ev_out;
    std::size_t ev_max = 0;
    std::vector<double> ev_dist;
    auto* evl = app.add_subcommand("eval", "text-to-image retrieval metrics");
    evl->add_option("--checkpoint", ev_ckpt, "checkpoint.plnt")->required();
    evl->add_option("--manifest", ev_manifest, "manifest.jsonl")->required();
    evl->add_option("--mode", ev_mode, "in-domain, cross-domain or train")
        ->check(CLI::IsMember({"in-domain", "cross-domain", "train"}));
    evl->add_option("--holdout", ev_holdout, "held-out region; implies cross-domain");
    evl->add_option("--format", ev_format, "table or json")->check(CLI::IsMember({"table", "json"}));
    evl->add_option("--out", ev_out, "write the report here instead of stdout");
    evl->add_option("--max-queries", ev_max, "cap on the number of queries (0 = all)");
    evl->add_option("--distance", ev_dist, "localization thresholds in metres (default 150)");

    std::vector<std::string> rp_logs;
    std::string rp_out;
    auto* rep = app.add_subcommand("report", "compare the final epochs of several runs");
    rep->add_option("logs", rp_logs, "metrics.jsonl files");
    rep->add_option("--out", rp_out, "write the table here instead of stdout");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty()) reversed.pop_back();  // program name
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        if (*synth) return cmd_synth(synth_n, synth_seed, synth_out, synth_regions, out);
        if (*extract) return cmd_extract(ex_manifest, ex_out, ex_cfg.resolve(), out);
        if (*trn) {
            RunConfig cfg = tr_cfg.resolve();
            if (tr_lambda) cfg.train.loss.lambda = *tr_lambda;
            if (tr_seed) cfg.train.seed = *tr_seed;
            if (tr_epochs) cfg.train.epochs = *tr_epochs;
            if (tr_lr) cfg.train.lr = *tr_lr;
            if (tr_batch) cfg.train.batch_size = *tr_batch;
            if (!tr_holdout.empty()) cfg.holdout = tr_holdout;
            return cmd_train(tr_manifest, tr_cache, tr_out, cfg, out);
        }
        if (*evl) return cmd_eval(ev_ckpt, ev_manifest, ev_mode, ev_holdout, ev_format, ev_out, ev_max, ev_dist, out);
        if (*rep) return cmd_report(rp_logs, rp_out, out);
    } catch (const std::exception& e) {
        const int code = exit_code(e);
        err << (code == 1 ? "usage error: " : code == 3 ? "numeric error: " : "error: ") << e.what() << "\n";
        return code;
    }
    return 1;
}

}  // namespace planet::cli
