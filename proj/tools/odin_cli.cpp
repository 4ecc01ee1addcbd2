// odin: command-line front end for ingest, community metadata, NPLL
// training, path discovery, explanation and evaluation.

#include "odin/odin.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    std::string input;          // triples, snapshot, report or spec file
    std::string output;         // command-specific output path
    std::string metadata_dir;
    std::string model_path;
    std::string entities_file;
    std::vector<std::string> seeds;

    std::size_t hops = 3;
    std::size_t beam = 64;
    std::size_t top = 50;
    bool allow_revisit = false;
    bool no_bridge = false;
    bool no_npll = false;
    bool no_temporal = false;

    odin::PprConfig ppr;
    odin::TrainConfig train;
    odin::CompassConfig compass;
    std::string prior_mode = "frequency";
    std::string normalizer = "frontier";
    std::uint64_t rng_seed = 42;

    std::size_t rank = 1;
    std::string out_json;
    bool print_json = false;

    bool eval_oracle = false;
    bool eval_ablation = false;
    bool eval_recall = false;
    std::size_t graphs = 20;
    std::size_t walks = 1000;
    std::vector<std::size_t> widths{1, 2, 4, 8, 16, 32};

    void finalize() {
        if (prior_mode == "frequency") compass.prior_mode = odin::PriorMode::frequency;
        else if (prior_mode == "inverse") compass.prior_mode = odin::PriorMode::inverse_frequency;
        else throw odin::Error(odin::ErrorKind::invalid_argument, "unknown prior mode: " + prior_mode);
        if (normalizer == "frontier") compass.normalizer_mode = odin::NormalizerMode::frontier_max;
        else if (normalizer == "fixed") compass.normalizer_mode = odin::NormalizerMode::fixed;
        else throw odin::Error(odin::ErrorKind::invalid_argument, "unknown normalizer: " + normalizer);
        train.rng_seed = rng_seed;
        compass.validate();
        ppr.validate();
        train.validate();
    }

    odin::SignalToggles toggles() const {
        auto t = odin::SignalToggles::all();
        if (no_npll) t.set(odin::Signal::edge, false);
        if (no_temporal) t.set(odin::Signal::temporal, false);
        if (no_bridge) t.set(odin::Signal::bridge, false).set(odin::Signal::affinity, false);
        return t;
    }

    odin::PipelineOptions pipeline_options() const {
        odin::PipelineOptions opts;
        opts.ppr = ppr;
        opts.train = train;
        opts.compass = compass;
        opts.toggles = toggles();
        opts.train_model = !no_npll;
        opts.community_seed = rng_seed;
        return opts;
    }

    json to_json() const {
        json j;
        j["seeds"] = seeds;
        j["metadata_dir"] = metadata_dir;
        j["model_path"] = model_path;
        j["search"] = {{"hops", hops}, {"beam_width", beam}, {"top_k", top}, {"allow_revisit", allow_revisit}};
        j["ablation"] = {{"no_bridge", no_bridge}, {"no_npll", no_npll}, {"no_temporal", no_temporal}};
        j["compass"] = {{"lambda_decay", compass.lambda_decay},
                        {"t_now", compass.t_now ? json(*compass.t_now) : json(nullptr)},
                        {"beta_bridge", compass.beta_bridge},
                        {"rho", compass.rho},
                        {"beta_affinity", compass.beta_affinity},
                        {"prior_mode", prior_mode},
                        {"normalizer", normalizer},
                        {"fixed_normalizer", compass.fixed_normalizer}};
        j["ppr"] = {{"alpha", ppr.alpha}, {"epsilon", ppr.epsilon}, {"symmetrize", ppr.symmetrize}};
        j["train"] = {{"min_support", train.min_support},     {"min_confidence", train.min_confidence},
                      {"negative_ratio", train.negative_ratio}, {"learning_rate", train.learning_rate},
                      {"epochs", train.epochs},               {"embedding_dim", train.embedding_dim},
                      {"embedding_weight", train.embedding_weight}, {"max_rules", train.max_rules},
                      {"max_sample", train.max_sample},       {"inner_steps", train.inner_steps},
                      {"l2", train.l2}};
        j["rng_seed"] = rng_seed;
        return j;
    }
};

std::string read_file(const std::string& path, const char* role) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw odin::Error(odin::ErrorKind::io, std::string("cannot open ") + role + ": " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw odin::Error(odin::ErrorKind::io, "cannot write " + path);
    out << content;
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        throw odin::Error(odin::ErrorKind::io, "sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

class Manifest {
public:
    explicit Manifest(const RunConfig& cfg) : config_(cfg.to_json()) {}

    void add(const std::string& role, const std::string& path, const std::string& content) {
        inputs_.push_back({{"role", role}, {"path", path}, {"sha256", sha256_hex(content)}});
    }

    json to_json() const { return {{"tool", "odin"}, {"version", kVersion}, {"config", config_}, {"inputs", inputs_}}; }

private:
    json config_;
    json inputs_ = json::array();
};

odin::GraphSnapshot load_graph(const RunConfig& cfg, Manifest& manifest) {
    const std::string text = read_file(cfg.input, "triples file");
    manifest.add("graph", cfg.input, text);
    std::istringstream in(text);
    return odin::ingest(in);
}

std::vector<odin::EntityIndex> resolve_seeds(const odin::GraphSnapshot& g, const std::vector<std::string>& ids) {
    std::vector<odin::EntityIndex> seeds;
    for (const auto& id : ids) seeds.push_back(g.entity(id));
    return seeds;
}

std::optional<odin::CommunityMetadata> load_metadata_input(const RunConfig& cfg, const odin::GraphSnapshot& g,
                                                           Manifest& manifest) {
    if (cfg.metadata_dir.empty()) return std::nullopt;
    for (const char* name : {odin::kCommunitiesFile, odin::kBridgesFile, odin::kAffinityFile}) {
        const auto path = (fs::path(cfg.metadata_dir) / name).string();
        if (fs::exists(path)) manifest.add(std::string("metadata:") + name, path, read_file(path, "metadata file"));
    }
    std::vector<std::string> warnings;
    auto meta = odin::load_metadata_or_absent(cfg.metadata_dir, g, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return meta;
}

void emit_json(const RunConfig& cfg, const json& doc) {
    const std::string text = doc.dump(2) + "\n";
    if (!cfg.out_json.empty()) write_file(cfg.out_json, text);
    if (cfg.print_json) std::cout << text;
}

int cmd_ingest(const RunConfig& cfg) {
    std::vector<std::string> extra;
    if (!cfg.entities_file.empty()) extra = odin::read_entity_file(cfg.entities_file);
    const auto g = odin::ingest_file(cfg.input, extra);
    write_file(cfg.output, odin::serialize(g));
    std::cout << "entities " << g.num_entities() << "\nrelations " << g.num_relations() << "\ntriples "
              << g.total_triples() << '\n';
    return 0;
}

int cmd_communities(const RunConfig& cfg) {
    Manifest manifest(cfg);
    const auto g = load_graph(cfg, manifest);
    const auto meta = odin::CommunityMetadata::compute(g, odin::louvain_detector, cfg.rng_seed);
    odin::save_metadata(cfg.output, g, meta);
    write_file((fs::path(cfg.output) / "manifest.json").string(), manifest.to_json().dump(2) + "\n");
    std::cout << "communities " << meta.assignment->num_communities << "\nbridges " << meta.bridges->size()
              << "\naffinity_pairs " << meta.affinity->entries().size() << '\n';
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    Manifest manifest(cfg);
    const auto g = load_graph(cfg, manifest);
    odin::FileWeightStore store(cfg.output);
    odin::LifecycleStats stats;
    const auto model = odin::ensure_model(store, g, cfg.train, &stats);
    for (const auto& w : stats.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "source " << odin::to_string(stats.source) << "\nrules " << model.rules.size() << "\nblob_bytes "
              << stats.blob_bytes << "\ntraining_runs " << stats.training_runs << "\nfallback "
              << (model.trained ? "no" : "yes") << '\n';
    return 0;
}

int cmd_discover(const RunConfig& cfg) {
    if (cfg.seeds.empty()) throw odin::Error(odin::ErrorKind::invalid_argument, "--seeds is required");
    Manifest manifest(cfg);
    const auto g = load_graph(cfg, manifest);
    const auto seeds = resolve_seeds(g, cfg.seeds);
    auto metadata = load_metadata_input(cfg, g, manifest);

    std::optional<odin::FileWeightStore> store;
    if (!cfg.model_path.empty() && !cfg.no_npll) store.emplace(cfg.model_path);
    const auto pipeline = odin::prepare_pipeline(g, seeds, cfg.pipeline_options(), store ? &*store : nullptr, metadata);
    for (const auto& w : pipeline.lifecycle.warnings) std::cerr << "warning: " << w << '\n';
    // The blob actually scored with, so loaded and freshly trained runs agree.
    if (pipeline.model.trained) manifest.add("model", cfg.model_path, odin::save_weights(pipeline.model, g));

    const auto scorer = pipeline.scorer();
    const odin::SearchConfig search{seeds, cfg.hops, cfg.beam, cfg.top, cfg.allow_revisit};
    const auto report = odin::discover(scorer, search);

    json doc = odin::search_report_to_json(g, report);
    doc["model"] = {{"trained", pipeline.model.trained}, {"rules", pipeline.model.rules.size()}};
    doc["manifest"] = manifest.to_json();
    emit_json(cfg, doc);
    if (!cfg.print_json) std::cout << odin::render_search_report(g, report);
    return 0;
}

int cmd_explain(const RunConfig& cfg) {
    json doc;
    try {
        doc = json::parse(read_file(cfg.input, "report"));
    } catch (const json::parse_error&) {
        throw odin::Error(odin::ErrorKind::parse, "report is not valid JSON: " + cfg.input);
    }
    if (!doc.contains("paths") || !doc["paths"].is_array())
        throw odin::Error(odin::ErrorKind::parse, "report has no paths array: " + cfg.input);
    const auto& paths = doc["paths"];
    if (cfg.rank == 0 || cfg.rank > paths.size())
        throw odin::Error(odin::ErrorKind::not_found,
                          "rank " + std::to_string(cfg.rank) + " not in report (" + std::to_string(paths.size()) + " paths)");
    const auto& entry = paths[cfg.rank - 1];
    const auto breakdown = odin::breakdown_from_json(entry);
    std::cout << odin::explain_narrative(breakdown, cfg.rank) << '\n';
    for (const auto& edge : entry.at("edges")) {
        std::cout << "  " << edge.at("s").get<std::string>() << " -[" << edge.at("r").get<std::string>() << "]-> "
                  << edge.at("o").get<std::string>();
        if (!edge.at("prov").empty()) {
            std::cout << "  prov:";
            for (const auto& p : edge.at("prov")) std::cout << ' ' << p.get<std::string>();
        }
        std::cout << '\n';
    }
    if (breakdown.compass > 0.0) {
        for (const auto& a : odin::explain(breakdown))
            std::cout << "  phi_" << odin::signal_key(a.signal) << " = " << odin::format_signed(a.phi, 6) << "  ("
                      << odin::signal_label(a.signal) << ", S=" << odin::format_number(breakdown.factor(a.signal), 6)
                      << ")\n";
    }
    return 0;
}

odin::SyntheticSpec spec_from_json(const json& j) {
    odin::SyntheticSpec spec;
    spec.num_entities = j.value("num_entities", spec.num_entities);
    spec.num_communities = j.value("num_communities", spec.num_communities);
    spec.p_in = j.value("p_in", spec.p_in);
    spec.p_out = j.value("p_out", spec.p_out);
    spec.num_relations = j.value("num_relations", spec.num_relations);
    spec.zipf_exponent = j.value("zipf_exponent", spec.zipf_exponent);
    spec.planted_bridges = j.value("planted_bridges", spec.planted_bridges);
    spec.bridge_links = j.value("bridge_links", spec.bridge_links);
    spec.num_documents = j.value("num_documents", spec.num_documents);
    spec.rng_seed = j.value("rng_seed", spec.rng_seed);
    if (j.contains("timestamp_range"))
        spec.timestamp_range = {j["timestamp_range"].at(0).get<std::int64_t>(), j["timestamp_range"].at(1).get<std::int64_t>()};
    if (j.contains("planted_rule")) {
        const auto& r = j["planted_rule"];
        spec.planted_rule = odin::PlantedRule{r.at("body").at(0).get<std::string>(), r.at("body").at(1).get<std::string>(),
                                              r.at("head").get<std::string>(), r.value("closure_probability", 1.0)};
    }
    return spec;
}

int cmd_eval(const RunConfig& cfg) {
    Manifest manifest(cfg);
    const std::string text = read_file(cfg.input, "eval input");
    manifest.add("eval_input", cfg.input, text);

    // A .json input is a synthetic-graph spec; anything else is a triples file.
    std::optional<odin::SyntheticSpec> spec;
    if (fs::path(cfg.input).extension() == ".json") {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error&) {
            throw odin::Error(odin::ErrorKind::parse, "spec is not valid JSON: " + cfg.input);
        }
        spec = spec_from_json(j.contains("synthetic") ? j["synthetic"] : j);
    }
    auto load = [&](std::uint64_t offset) {
        if (!spec) {
            std::istringstream in(text);
            return odin::ingest(in);
        }
        auto s = *spec;
        s.rng_seed += offset;
        return odin::generate(s).graph;
    };

    json doc;
    doc["manifest"] = manifest.to_json();
    const bool any = cfg.eval_oracle || cfg.eval_ablation || cfg.eval_recall;

    if (cfg.eval_recall) {
        // One case per graph for specs; one case per seed for a fixed graph.
        std::vector<odin::GraphSnapshot> graphs;
        std::vector<std::vector<odin::EntityIndex>> seed_sets;
        if (spec) {
            for (std::size_t i = 0; i < cfg.graphs; ++i) graphs.push_back(load(i));
            for (const auto& g : graphs)
                seed_sets.push_back(cfg.seeds.empty() ? std::vector{odin::busiest_entity(g)} : resolve_seeds(g, cfg.seeds));
        } else {
            graphs.push_back(load(0));
            if (cfg.seeds.empty()) seed_sets.push_back({odin::busiest_entity(graphs[0])});
            for (const auto& id : cfg.seeds) seed_sets.push_back({graphs[0].entity(id)});
        }
        std::vector<odin::Pipeline> pipelines;
        pipelines.reserve(seed_sets.size());
        for (std::size_t i = 0; i < seed_sets.size(); ++i)
            pipelines.push_back(odin::prepare_pipeline(graphs[spec ? i : 0], seed_sets[i], cfg.pipeline_options()));
        std::vector<odin::CompassScorer> scorers;
        for (const auto& p : pipelines) scorers.push_back(p.scorer());
        std::vector<odin::RecallCase> cases;
        for (std::size_t i = 0; i < scorers.size(); ++i) cases.push_back({&scorers[i], seed_sets[i]});
        const auto curve = odin::recall_curve(cases, cfg.widths, cfg.hops, cfg.top);
        doc["recall"] = odin::recall_curve_to_json(curve);
        if (!cfg.print_json) {
            std::cout << "beam  recall  1-exp(-b/d)\n";
            for (const auto& p : curve)
                std::cout << p.beam_width << "  " << odin::format_number(p.mean_recall, 4) << "  "
                          << odin::format_number(p.bound, 4) << '\n';
        }
    }

    if (cfg.eval_oracle || cfg.eval_ablation || !any) {
        const auto g = load(0);
        const auto seeds = cfg.seeds.empty() ? std::vector{odin::busiest_entity(g)} : resolve_seeds(g, cfg.seeds);
        auto metadata = spec ? std::nullopt : load_metadata_input(cfg, g, manifest);
        const auto pipeline = odin::prepare_pipeline(g, seeds, cfg.pipeline_options(), nullptr, metadata);
        const auto scorer = pipeline.scorer();
        const odin::SearchConfig search{seeds, cfg.hops, cfg.beam, cfg.top, cfg.allow_revisit};
        if (cfg.eval_oracle || !any) {
            const auto report = odin::compare_methods(scorer, search, cfg.walks, cfg.rng_seed);
            doc["methods"] = odin::eval_report_to_json(report);
            if (!cfg.print_json) std::cout << odin::render_eval_table(report);
        }
        if (cfg.eval_ablation) {
            const auto report = odin::run_ablation(scorer, search);
            doc["ablation"] = odin::eval_report_to_json(report);
            if (!cfg.print_json) std::cout << odin::render_eval_table(report);
        }
    }
    emit_json(cfg, doc);
    return 0;
}

void print_error(std::string_view kind, std::string_view message) {
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"odin: explainable multi-hop path discovery over knowledge graphs"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "key=value file mirroring the command-line options");
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig cfg;
    std::optional<std::int64_t> t_now;

    app.add_option("--seeds", cfg.seeds, "Seed entity ids")->delimiter(',');
    app.add_option("--hops", cfg.hops, "Maximum path length")->check(CLI::PositiveNumber);
    app.add_option("--beam", cfg.beam, "Beam width")->check(CLI::PositiveNumber);
    app.add_option("--top", cfg.top, "Number of ranked paths")->check(CLI::PositiveNumber);
    app.add_option("--lambda", cfg.compass.lambda_decay, "Temporal decay rate per timestamp unit");
    app.add_option("--t-now", t_now, "Reference time (default: newest timestamp)");
    app.add_option("--beta-bridge", cfg.compass.beta_bridge, "Bridge boost weight");
    app.add_option("--rho", cfg.compass.rho, "Exponent on the mean bridge boost");
    app.add_option("--beta-affinity", cfg.compass.beta_affinity, "Community affinity boost weight");
    app.add_option("--prior-mode", cfg.prior_mode, "frequency or inverse");
    app.add_option("--normalizer", cfg.normalizer, "frontier or fixed");
    app.add_option("--fixed-normalizer", cfg.compass.fixed_normalizer, "Struct normalizer when --normalizer fixed");
    app.add_option("--alpha", cfg.ppr.alpha, "PPR teleport probability");
    app.add_option("--epsilon", cfg.ppr.epsilon, "PPR residual tolerance");
    app.add_flag("--symmetrize", cfg.ppr.symmetrize, "PPR walks ignore edge direction");
    app.add_option("--min-support", cfg.train.min_support, "Minimum rule support");
    app.add_option("--min-confidence", cfg.train.min_confidence, "Minimum rule confidence");
    app.add_option("--negative-ratio", cfg.train.negative_ratio, "Corrupted negatives per positive edge");
    app.add_option("--learning-rate", cfg.train.learning_rate, "EM gradient step size");
    app.add_option("--epochs", cfg.train.epochs, "EM training epochs");
    app.add_option("--embedding-dim", cfg.train.embedding_dim, "Reconstructed embedding dimension");
    app.add_option("--embedding-weight", cfg.train.embedding_weight, "Weight of the embedding term in edge plausibility");
    app.add_option("--max-rules", cfg.train.max_rules, "Keep at most this many mined rules");
    app.add_flag("--no-bridge", cfg.no_bridge, "Force bridge and affinity signals to 1");
    app.add_flag("--no-npll", cfg.no_npll, "Force the edge plausibility signal to 1");
    app.add_flag("--no-temporal", cfg.no_temporal, "Force the temporal signal to 1");
    app.add_flag("--allow-revisit", cfg.allow_revisit, "Allow paths to revisit entities");
    app.add_option("--seed", cfg.rng_seed, "Seed for training, community detection and baselines");
    app.add_option("--metadata", cfg.metadata_dir, "Community metadata directory");
    app.add_option("--model", cfg.model_path, "NPLL weight blob path");
    app.add_option("--out", cfg.out_json, "Write JSON output here");
    app.add_flag("--json", cfg.print_json, "Print JSON to stdout instead of text");

    auto* ingest = app.add_subcommand("ingest", "Validate a triples file and write a canonical snapshot");
    ingest->add_option("triples", cfg.input)->required();
    ingest->add_option("snapshot", cfg.output)->required();
    ingest->add_option("--entities", cfg.entities_file, "Extra entity ids, one per line");

    auto* communities = app.add_subcommand("communities", "Detect communities, bridges and affinity");
    communities->add_option("snapshot", cfg.input)->required();
    communities->add_option("out_dir", cfg.output)->required();

    auto* train = app.add_subcommand("train", "Load or train NPLL weights");
    train->add_option("snapshot", cfg.input)->required();
    train->add_option("model", cfg.output)->required();

    auto* discover = app.add_subcommand("discover", "Rank multi-hop paths from seed entities");
    discover->add_option("snapshot", cfg.input)->required();

    auto* explain = app.add_subcommand("explain", "Narrate one path of a discover report");
    explain->add_option("report", cfg.input)->required();
    explain->add_option("rank", cfg.rank)->required();

    auto* eval = app.add_subcommand("eval", "Oracle, baseline, ablation and recall harness");
    eval->add_option("input", cfg.input, "Snapshot/triples file, or a .json synthetic spec")->required();
    eval->add_flag("--oracle,--baselines", cfg.eval_oracle, "Exhaustive, beam, random-walk and PPR-only rows");
    eval->add_flag("--ablation", cfg.eval_ablation, "Full, No-NPLL, No-Temporal, No-Bridge rows");
    eval->add_flag("--recall", cfg.eval_recall, "Beam recall of the oracle top-k versus beam width");
    eval->add_option("--graphs", cfg.graphs, "Graphs per recall point (spec input)");
    eval->add_option("--walks", cfg.walks, "Random-walk baseline walk count");
    eval->add_option("--widths", cfg.widths, "Beam widths for the recall curve")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    try {
        cfg.compass.t_now = t_now;
        cfg.finalize();
        if (*ingest) return cmd_ingest(cfg);
        if (*communities) return cmd_communities(cfg);
        if (*train) return cmd_train(cfg);
        if (*discover) return cmd_discover(cfg);
        if (*explain) return cmd_explain(cfg);
        if (*eval) return cmd_eval(cfg);
    } catch (const odin::Error& e) {
        print_error(odin::to_string(e.kind()), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
    return 1;
}
