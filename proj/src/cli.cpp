#include "multilink/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "multilink/csv.hpp"
#include "multilink/log.hpp"
#include "multilink/util.hpp"

namespace multilink {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string join(const std::string& dir, const std::string& name) {
    return dir + "/" + name;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw DataError("cannot create output directory " + dir + ": " +
                        ec.message());
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

ComparisonData load_comparison_artifact(const RunConfig& cfg) {
    return read_comparisons(join(cfg.out, "comparisons.csv"),
                            join(cfg.out, "comparisons-meta.json"));
}

PriorConfig effective_prior(const RunConfig& cfg, const ComparisonData& data) {
    std::vector<bool> dup(data.dup_allowed.begin(), data.dup_allowed.end());
    return cfg.prior.build(data.K, static_cast<int>(data.file_of.size()), dup);
}

GibbsConfig effective_gibbs(const RunConfig& cfg, const ComparisonData& data,
                            std::uint64_t chain_seed) {
    GibbsConfig g = cfg.gibbs;
    g.seed = chain_seed;
    g.single_model = cfg.likelihood.single_model;
    g.hyper = cfg.likelihood.build(data.num_levels);
    return g;
}

// Percentile with linear interpolation between the closest order statistics.
double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    double h = (static_cast<double>(v.size()) - 1) * p / 100.0;
    std::size_t lo = static_cast<std::size_t>(h);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

}  // namespace

void cmd_simulate(const RunConfig& cfg) {
    if (!cfg.simulate)
        throw ConfigError("simulate needs a \"simulate\" section");
    const auto& sim = *cfg.simulate;
    ensure_dir(cfg.out);
    const std::string tables_dir =
        sim.tables_dir.empty() ? default_tables_dir() : sim.tables_dir;
    const LookupTables tables = LookupTables::load(tables_dir);

    Rng rng(derive_seed(cfg.seed, "simulate"));
    SimTruth truth = generate_truth(sim.scenario, sim.entities, tables, rng);
    FileCollection observed =
        distort(truth.files, tables, sim.errors_per_record, rng);

    json files = json::array();
    for (int k = 0; k < observed.num_files(); ++k) {
        const std::string name = observed.files[k].name + ".csv";
        write_file_csv(observed, k, join(cfg.out, name));
        files.push_back({{"name", observed.files[k].name},
                         {"path", name},
                         {"records", observed.files[k].num_records},
                         {"hash", hex64(hash_file_bytes(join(cfg.out, name)))}});
    }
    write_truth_labels(truth, join(cfg.out, "truth.csv"));

    write_json_file(join(cfg.out, "simulate-summary.json"),
                    {{"command", "simulate"},
                     {"seed", cfg.seed},
                     {"scenario", sim.scenario.name},
                     {"entities", sim.entities},
                     {"errors_per_record", sim.errors_per_record},
                     {"total_records", observed.num_records()},
                     {"files", files},
                     {"truth_hash", hex64(hash_file_bytes(join(cfg.out, "truth.csv")))}});
    mlog::info("simulated " + std::to_string(observed.num_records()) +
               " records for " + std::to_string(sim.entities) + " entities");
}

void cmd_compare(const RunConfig& cfg) {
    ensure_dir(cfg.out);
    const Schema schema = cfg.effective_schema();
    const auto files = cfg.effective_files();
    const FileCollection fc = load_files(files, schema);
    const auto comparators = cfg.effective_comparators(schema);
    bool fold_excluded = true;
    const CandidateSet cands =
        build_candidate_set(fc, schema, comparators, cfg.candidates, fold_excluded);
    const ComparisonData data =
        build_comparisons(fc, comparators, cands, fold_excluded);
    write_comparisons(data, join(cfg.out, "comparisons.csv"),
                      join(cfg.out, "comparisons-meta.json"));

    write_json_file(
        join(cfg.out, "compare-summary.json"),
        {{"command", "compare"},
         {"records", data.file_of.size()},
         {"universe_pairs", data.universe_pairs},
         {"modeled_pairs", data.modeled_pairs},
         {"candidate_pairs", data.num_pairs()},
         {"blocks", data.num_blocks},
         {"fold_excluded", data.fold_excluded},
         {"source_hash", hex64(data.source_hash)},
         {"rows_hash", hex64(hash_file_bytes(join(cfg.out, "comparisons.csv")))}});
    mlog::info("compared " + std::to_string(data.num_pairs()) +
               " candidate pairs out of " + std::to_string(data.universe_pairs));
}

void cmd_sample(const RunConfig& cfg) {
    const ComparisonData data = load_comparison_artifact(cfg);
    const PriorConfig prior = effective_prior(cfg, data);
    const GibbsConfig gibbs =
        effective_gibbs(cfg, data, derive_seed(cfg.seed, "chain"));
    const PosteriorSamples samples = run_chain(data, prior, gibbs);
    write_samples(samples, join(cfg.out, "samples.csv"));
    write_trace(samples, join(cfg.out, "trace.csv"));

    double mean_n = 0.0;
    for (auto n : samples.n_trace) mean_n += n;
    if (!samples.n_trace.empty()) mean_n /= static_cast<double>(samples.n_trace.size());
    write_json_file(
        join(cfg.out, "sample-summary.json"),
        {{"command", "sample"},
         {"seed", cfg.seed},
         {"chain_seed", gibbs.seed},
         {"iterations", samples.iterations},
         {"burn_in", samples.burn_in},
         {"thin", samples.thin},
         {"stored", samples.num_stored()},
         {"mean_clusters", mean_n},
         {"wall_seconds", samples.wall_seconds},
         {"comparisons_hash",
          hex64(hash_file_bytes(join(cfg.out, "comparisons.csv")))}});
    mlog::info("stored " + std::to_string(samples.num_stored()) +
               " posterior samples in " + format_double(samples.wall_seconds) +
               "s");
}

void cmd_estimate(const RunConfig& cfg) {
    const ComparisonData data = load_comparison_artifact(cfg);
    const auto samples = read_samples(join(cfg.out, "samples.csv"));
    if (!samples.empty() &&
        samples.front().size() != data.file_of.size())
        throw DataError("samples do not match the comparison artifact");
    const LinkageEstimate est =
        bayes_estimate(samples, data, cfg.loss, cfg.estimate.options);
    write_estimate(est, data, join(cfg.out, "estimate.csv"));

    std::map<int, int> comp_size;
    for (int c : est.component_of) ++comp_size[c];
    std::map<int, int> histogram;  // size -> number of components
    for (const auto& [c, size] : comp_size) ++histogram[size];
    json hist = json::object();
    for (const auto& [size, count] : histogram)
        hist[std::to_string(size)] = count;
    int abstained = 0;
    for (auto d : est.decision)
        if (d == kAbstain) ++abstained;

    write_json_file(
        join(cfg.out, "estimate-summary.json"),
        {{"command", "estimate"},
         {"delta", est.delta},
         {"expected_loss", est.expected_loss_value},
         {"components", est.num_components},
         {"component_size_histogram", hist},
         {"abstained", abstained},
         {"partial", cfg.loss.partial()},
         {"loss",
          {{"fnm", cfg.loss.fnm},
           {"fm1", cfg.loss.fm1},
           {"fm2", cfg.loss.fm2},
           {"abstain", cfg.loss.partial() ? json(cfg.loss.abstain) : json()}}},
         {"samples_hash", hex64(hash_file_bytes(join(cfg.out, "samples.csv")))}});
    mlog::info("estimate: delta " + format_double(est.delta) + ", " +
               std::to_string(est.num_components) + " components, " +
               std::to_string(abstained) + " abstained");
}

void cmd_evaluate(const RunConfig& cfg) {
    const std::string truth_path =
        cfg.truth_path.empty() ? join(cfg.out, "truth.csv") : cfg.truth_path;
    const auto truth = read_truth_labels(truth_path);
    const auto decisions = read_estimate(join(cfg.out, "estimate.csv"));
    const Metrics m = score_estimate(truth, decisions);

    std::string out = "precision,recall,abstention,n_true,n_est,n_bias\n";
    out += format_double(m.precision) + "," + format_double(m.recall) + "," +
           format_double(m.abstention) + "," + std::to_string(m.n_true) + "," +
           std::to_string(m.n_est) + "," + format_double(m.n_bias()) + "\n";
    write_text_file(join(cfg.out, "metrics.csv"), out);
    mlog::info("metrics: precision " + format_double(m.precision) +
               ", recall " + format_double(m.recall) + ", abstention " +
               format_double(m.abstention));
}

namespace {

struct ReplicateRow {
    int level = 0;
    int replicate = 0;  // 1-based in reports
    int records = 0;
    Metrics metrics;
    double expected_loss = 0.0;
    double delta = 0.0;
    double chain_seconds = 0.0;
};

ReplicateRow run_replicate(const RunConfig& cfg, const Schema& schema,
                           const std::vector<ComparatorSpec>& comparators,
                           const LookupTables& tables, int error_level,
                           int rep_index) {
    const auto& sim = *cfg.simulate;
    const std::uint64_t rep_seed = derive_seed(cfg.seed, "replicate", rep_index);

    // The population is shared across error levels (paired comparisons);
    // distortion and the chain get level-specific streams.
    Rng truth_rng(derive_seed(rep_seed, "truth"));
    SimTruth truth = generate_truth(sim.scenario, sim.entities, tables, truth_rng);
    Rng distort_rng(derive_seed(rep_seed, "distort", error_level));
    FileCollection observed = distort(truth.files, tables, error_level, distort_rng);

    bool fold_excluded = true;
    CandidateSet cands = build_candidate_set(observed, schema, comparators,
                                             cfg.candidates, fold_excluded);
    ComparisonData data =
        build_comparisons(observed, comparators, cands, fold_excluded);
    PriorConfig prior = effective_prior(cfg, data);
    GibbsConfig gibbs =
        effective_gibbs(cfg, data, derive_seed(rep_seed, "chain", error_level));
    PosteriorSamples samples = run_chain(data, prior, gibbs);
    LinkageEstimate est =
        bayes_estimate(samples.labels, data, cfg.loss, cfg.estimate.options);
    Metrics m = score_estimate(truth.labels, est.decision);

    write_truth_labels(truth, join(cfg.out, "replicates/truth-E" +
                                                std::to_string(error_level) +
                                                "-r" +
                                                std::to_string(rep_index + 1) +
                                                ".csv"));
    ReplicateRow row;
    row.level = error_level;
    row.replicate = rep_index + 1;
    row.records = static_cast<int>(data.file_of.size());
    row.metrics = m;
    row.expected_loss = est.expected_loss_value;
    row.delta = est.delta;
    row.chain_seconds = samples.wall_seconds;
    return row;
}

struct Band {
    double p2 = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
    double p98 = std::numeric_limits<double>::quiet_NaN();
    int na_count = 0;
};

Band band_of(const std::vector<double>& values) {
    Band b;
    std::vector<double> defined;
    for (double v : values) {
        if (std::isnan(v))
            ++b.na_count;
        else
            defined.push_back(v);
    }
    if (!defined.empty()) {
        b.p2 = percentile(defined, 2.0);
        b.median = percentile(defined, 50.0);
        b.p98 = percentile(defined, 98.0);
    }
    return b;
}

}  // namespace

void cmd_replicate(const RunConfig& cfg) {
    if (!cfg.simulate)
        throw ConfigError("replicate needs a \"simulate\" section");
    if (!cfg.replicate)
        throw ConfigError("replicate needs a \"replicate\" section");
    if (!cfg.schema.fields.empty() || !cfg.files.empty())
        throw ConfigError(
            "replicate generates its own records; drop the schema/files sections");
    const auto& sim = *cfg.simulate;
    const auto& rep = *cfg.replicate;
    std::vector<int> levels = rep.error_levels.empty()
                                  ? std::vector<int>{sim.errors_per_record}
                                  : rep.error_levels;
    ensure_dir(cfg.out);
    ensure_dir(join(cfg.out, "replicates"));
    const std::string tables_dir =
        sim.tables_dir.empty() ? default_tables_dir() : sim.tables_dir;
    const LookupTables tables = LookupTables::load(tables_dir);
    const Schema schema = sim_schema();
    const auto comparators = cfg.effective_comparators(schema);
    // Materialise the prior settings early so bad configs fail before work.
    cfg.prior.build(kSimFiles, std::max(2 * sim.entities, 4),
                    std::vector<bool>(kSimFiles, sim.scenario.duplicates));

    const int total_jobs = static_cast<int>(levels.size()) * rep.count;
    std::vector<ReplicateRow> rows(total_jobs);
    std::vector<std::string> failures(total_jobs);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int j = next.fetch_add(1);
            if (j >= total_jobs) return;
            const int level = levels[j / rep.count];
            const int rep_index = j % rep.count;
            try {
                rows[j] = run_replicate(cfg, schema, comparators, tables, level,
                                        rep_index);
                mlog::info("replicate E=" + std::to_string(level) + " #" +
                           std::to_string(rep_index + 1) + ": precision " +
                           format_double(rows[j].metrics.precision));
            } catch (const std::exception& e) {
                failures[j] = e.what();
            }
        }
    };
    const int workers = std::clamp(rep.workers, 1, total_jobs);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& f : failures)
        if (!f.empty()) throw DataError("replicate failed: " + f);

    std::string detail =
        "error_level,replicate,records,precision,recall,abstention,n_true,"
        "n_est,expected_loss,delta,chain_seconds\n";
    for (const auto& r : rows) {
        detail += std::to_string(r.level) + "," + std::to_string(r.replicate) +
                  "," + std::to_string(r.records) + "," +
                  format_double(r.metrics.precision) + "," +
                  format_double(r.metrics.recall) + "," +
                  format_double(r.metrics.abstention) + "," +
                  std::to_string(r.metrics.n_true) + "," +
                  std::to_string(r.metrics.n_est) + "," +
                  format_double(r.expected_loss) + "," +
                  format_double(r.delta) + "," +
                  format_double(r.chain_seconds) + "\n";
    }
    write_text_file(join(cfg.out, "replicates.csv"), detail);

    std::string agg =
        "error_level,precision_p2,precision_median,precision_p98,precision_na,"
        "recall_p2,recall_median,recall_p98,recall_na,abstention_p2,"
        "abstention_median,abstention_p98,n_bias_mean,n_mse\n";
    std::string plot =
        "error_level,precision_median,precision_p2,precision_p98,"
        "recall_median,recall_p2,recall_p98,abstention_median,abstention_p2,"
        "abstention_p98\n";
    for (std::size_t li = 0; li < levels.size(); ++li) {
        std::vector<double> precision, recall, abstention;
        double bias = 0.0, mse = 0.0;
        for (int i = 0; i < rep.count; ++i) {
            const auto& r = rows[li * rep.count + i];
            precision.push_back(r.metrics.precision);
            recall.push_back(r.metrics.recall);
            abstention.push_back(r.metrics.abstention);
            bias += r.metrics.n_bias();
            mse += r.metrics.n_bias() * r.metrics.n_bias();
        }
        bias /= rep.count;
        mse /= rep.count;
        const Band bp = band_of(precision), br = band_of(recall),
                   ba = band_of(abstention);
        agg += std::to_string(levels[li]) + "," + format_double(bp.p2) + "," +
               format_double(bp.median) + "," + format_double(bp.p98) + "," +
               std::to_string(bp.na_count) + "," + format_double(br.p2) + "," +
               format_double(br.median) + "," + format_double(br.p98) + "," +
               std::to_string(br.na_count) + "," + format_double(ba.p2) + "," +
               format_double(ba.median) + "," + format_double(ba.p98) + "," +
               format_double(bias) + "," + format_double(mse) + "\n";
        plot += std::to_string(levels[li]) + "," + format_double(bp.median) +
                "," + format_double(bp.p2) + "," + format_double(bp.p98) + "," +
                format_double(br.median) + "," + format_double(br.p2) + "," +
                format_double(br.p98) + "," + format_double(ba.median) + "," +
                format_double(ba.p2) + "," + format_double(ba.p98) + "\n";
    }
    write_text_file(join(cfg.out, "aggregate.csv"), agg);
    write_text_file(join(cfg.out, "plot-data.csv"), plot);
    write_json_file(join(cfg.out, "replicate-summary.json"),
                    {{"command", "replicate"},
                     {"seed", cfg.seed},
                     {"scenario", sim.scenario.name},
                     {"entities", sim.entities},
                     {"replicates", rep.count},
                     {"error_levels", levels},
                     {"workers", workers},
                     {"partial", cfg.loss.partial()}});
    mlog::info("replicate report written to " + join(cfg.out, "aggregate.csv"));
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Bayesian multifile record linkage and duplicate detection"};
    app.fallthrough();
    std::string config_path, out_override;
    std::uint64_t seed_override = 0;
    int workers_override = 0;
    auto* copt =
        app.add_option("--config", config_path, "run configuration (JSON)");
    auto* sopt = app.add_option("--seed", seed_override, "master seed override");
    auto* oopt =
        app.add_option("--out", out_override, "output directory override");
    auto* wopt = app.add_option("--workers", workers_override,
                                "replicate worker-count override");

    struct Command {
        const char* name;
        const char* help;
        void (*fn)(const RunConfig&);
    };
    const Command commands[] = {
        {"simulate", "generate synthetic files plus ground-truth labels",
         &cmd_simulate},
        {"compare", "build the discretised comparison artifact", &cmd_compare},
        {"sample", "run the Gibbs sampler over partitions", &cmd_sample},
        {"estimate", "derive the Bayes estimate from stored samples",
         &cmd_estimate},
        {"evaluate", "score an estimate against truth labels", &cmd_evaluate},
        {"replicate", "run the full simulate-to-evaluate loop R times",
         &cmd_replicate},
    };
    for (const auto& c : commands) app.add_subcommand(c.name, c.help);
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (copt->count() == 0) throw ConfigError("--config is required");
        RunConfig cfg = RunConfig::load(config_path);
        if (sopt->count() > 0) cfg.seed = seed_override;
        if (oopt->count() > 0) cfg.out = out_override;
        if (wopt->count() > 0 && cfg.replicate)
            cfg.replicate->workers = std::max(1, workers_override);
        const std::string name = app.get_subcommands().front()->get_name();
        for (const auto& c : commands) {
            if (name == c.name) {
                c.fn(cfg);
                return 0;
            }
        }
        throw ConfigError("unknown subcommand " + name);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace multilink
