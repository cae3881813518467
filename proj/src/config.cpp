#include "multilink/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "multilink/csv.hpp"
#include "multilink/util.hpp"

namespace multilink {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) bad(where, "expected an object");
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    expect_object(j, where);
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                return key == a;
            }) == allowed.end())
            bad(where, "unknown key \"" + key + "\"");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        bad(where, std::string("bad value for \"") + key + "\"");
    }
}

std::vector<double> number_list(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) bad(where, "expected a non-empty array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) bad(where, "expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

Schema parse_schema(const json& j, const std::string& where) {
    check_keys(j, where, {"fields", "missing"});
    Schema schema;
    auto fields = j.find("fields");
    if (fields == j.end() || !fields->is_array() || fields->empty())
        bad(where, "needs a non-empty \"fields\" array");
    for (const auto& fj : *fields) {
        check_keys(fj, where + ".fields[]", {"name", "kind"});
        FieldDef def;
        def.name = get_or<std::string>(fj, "name", "", where);
        if (def.name.empty()) bad(where, "field without a name");
        std::string kind = get_or<std::string>(fj, "kind", "string", where);
        if (kind == "string")
            def.kind = FieldKind::string_field;
        else if (kind == "categorical")
            def.kind = FieldKind::categorical;
        else if (kind == "integer")
            def.kind = FieldKind::integer;
        else
            bad(where, "unknown field kind \"" + kind + "\"");
        schema.fields.push_back(def);
    }
    if (auto missing = j.find("missing"); missing != j.end()) {
        if (!missing->is_array()) bad(where, "\"missing\" must be an array");
        schema.missing_sentinels.clear();
        for (const auto& m : *missing)
            schema.missing_sentinels.push_back(m.get<std::string>());
    }
    return schema;
}

std::pair<std::string, ComparatorSpec> parse_comparator(const json& j,
                                                        const std::string& where) {
    check_keys(j, where, {"field", "kind", "breakpoints"});
    std::string field = get_or<std::string>(j, "field", "", where);
    if (field.empty()) bad(where, "comparator without a field name");
    std::string kind = get_or<std::string>(j, "kind", "", where);
    ComparatorSpec spec;
    if (kind == "normalized_edit")
        spec.kind = ComparatorKind::normalized_edit;
    else if (kind == "binary")
        spec.kind = ComparatorKind::binary;
    else if (kind == "absolute_difference")
        spec.kind = ComparatorKind::absolute_difference;
    else
        bad(where, "unknown comparator kind \"" + kind + "\" for field \"" +
                       field + "\"");
    if (auto bp = j.find("breakpoints"); bp != j.end() && !bp->is_null()) {
        if (spec.kind == ComparatorKind::binary)
            bad(where, "binary comparators take no breakpoints");
        spec.breakpoints = number_list(*bp, where + ".breakpoints");
    } else if (spec.kind == ComparatorKind::normalized_edit) {
        spec.breakpoints = {0.0, 0.25, 0.5};
    } else if (spec.kind == ComparatorKind::absolute_difference) {
        bad(where, "absolute_difference needs explicit breakpoints");
    }
    return {field, spec};
}

CandidateSettings parse_candidates(const json& j, const std::string& where) {
    check_keys(j, where, {"method", "fields", "thresholds"});
    CandidateSettings cs;
    std::string method = get_or<std::string>(j, "method", "all", where);
    if (method == "all") {
        cs.method = CandidateMethod::all_pairs;
    } else if (method == "block") {
        cs.method = CandidateMethod::block;
        auto fields = j.find("fields");
        if (fields == j.end() || !fields->is_array() || fields->empty())
            bad(where, "blocking needs a non-empty \"fields\" array");
        for (const auto& f : *fields) cs.block_fields.push_back(f.get<std::string>());
    } else if (method == "indexing") {
        cs.method = CandidateMethod::indexing;
        auto th = j.find("thresholds");
        if (th == j.end() || !th->is_array() || th->empty())
            bad(where, "indexing needs a non-empty \"thresholds\" array");
        for (const auto& t : *th) {
            check_keys(t, where + ".thresholds[]", {"field", "max_level"});
            std::string f = get_or<std::string>(t, "field", "", where);
            if (f.empty()) bad(where, "threshold without a field name");
            int level = get_or<int>(t, "max_level", -1, where);
            if (level < 0) bad(where, "threshold needs max_level >= 0");
            cs.thresholds.emplace_back(f, level);
        }
    } else {
        bad(where, "unknown candidate method \"" + method + "\"");
    }
    return cs;
}

PriorSettings::Size parse_size(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "mean", "max", "pmf"});
    PriorSettings::Size s;
    std::string kind = get_or<std::string>(j, "kind", "point", where);
    if (kind == "point") {
        s.kind = PriorSettings::Size::Kind::point;
    } else if (kind == "poisson") {
        s.kind = PriorSettings::Size::Kind::poisson;
        s.mean = get_or<double>(j, "mean", 1.0, where);
        s.max = get_or<int>(j, "max", 10, where);
    } else if (kind == "pmf") {
        s.kind = PriorSettings::Size::Kind::pmf;
        auto pmf = j.find("pmf");
        if (pmf == j.end()) bad(where, "size pmf missing");
        s.pmf = number_list(*pmf, where + ".pmf");
    } else {
        bad(where, "unknown size prior kind \"" + kind + "\"");
    }
    return s;
}

PriorSettings parse_prior(const json& j, const std::string& where) {
    check_keys(j, where, {"cluster_count", "alpha", "sizes", "flat"});
    PriorSettings ps;
    if (auto cc = j.find("cluster_count"); cc != j.end()) {
        check_keys(*cc, where + ".cluster_count", {"kind", "upper", "pmf"});
        std::string kind = get_or<std::string>(*cc, "kind", "uniform", where);
        if (kind == "uniform")
            ps.count = PriorSettings::Count::uniform;
        else if (kind == "negative_binomial")
            ps.count = PriorSettings::Count::negative_binomial;
        else if (kind == "pmf")
            ps.count = PriorSettings::Count::pmf;
        else
            bad(where, "unknown cluster_count kind \"" + kind + "\"");
        if (auto up = cc->find("upper"); up != cc->end() && !up->is_null()) {
            if (ps.count == PriorSettings::Count::pmf)
                bad(where, "a pmf fixes its own upper bound");
            ps.count_upper = up->get<int>();
        }
        if (ps.count == PriorSettings::Count::pmf) {
            auto pmf = cc->find("pmf");
            if (pmf == cc->end()) bad(where, "cluster_count pmf missing");
            ps.count_pmf = number_list(*pmf, where + ".cluster_count.pmf");
        }
    }
    if (auto al = j.find("alpha"); al != j.end()) {
        if (al->is_string()) {
            std::string name = al->get<std::string>();
            if (name == "default")
                ps.alpha = PriorSettings::Alpha::preset;
            else if (name == "flat-cells")
                ps.alpha = PriorSettings::Alpha::flat_cells;
            else if (name == "sparse-cells")
                ps.alpha = PriorSettings::Alpha::sparse_cells;
            else
                bad(where, "unknown alpha preset \"" + name + "\"");
        } else if (al->is_object()) {
            ps.alpha = PriorSettings::Alpha::explicit_values;
            for (const auto& [pattern, value] : al->items()) {
                if (!value.is_number()) bad(where, "alpha cells must be numbers");
                ps.alpha_cells.emplace_back(pattern, value.get<double>());
            }
        } else {
            bad(where, "\"alpha\" must be a preset name or a pattern map");
        }
    }
    if (auto sz = j.find("sizes"); sz != j.end()) {
        if (sz->is_object()) {
            ps.sizes.push_back(parse_size(*sz, where + ".sizes"));
        } else if (sz->is_array()) {
            for (const auto& s : *sz) ps.sizes.push_back(parse_size(s, where + ".sizes[]"));
        } else {
            bad(where, "\"sizes\" must be an object or an array");
        }
    }
    ps.flat = get_or<bool>(j, "flat", false, where);
    return ps;
}

GibbsConfig parse_gibbs(const json& j, const std::string& where) {
    check_keys(j, where,
               {"iterations", "burn_in", "thin", "init", "order",
                "checkpoint_every", "prune_nats"});
    GibbsConfig g;
    g.iterations = get_or<int>(j, "iterations", g.iterations, where);
    g.burn_in = get_or<int>(j, "burn_in", g.burn_in, where);
    g.thin = get_or<int>(j, "thin", g.thin, where);
    std::string init = get_or<std::string>(j, "init", "singletons", where);
    if (init == "singletons")
        g.init = InitStrategy::singletons;
    else if (init == "random-matching")
        g.init = InitStrategy::random_matching;
    else
        bad(where, "unknown init strategy \"" + init + "\"");
    std::string order = get_or<std::string>(j, "order", "ascending", where);
    if (order == "ascending")
        g.sweep = SweepOrder::ascending;
    else if (order == "random")
        g.sweep = SweepOrder::random_scan;
    else
        bad(where, "unknown sweep order \"" + order + "\"");
    g.checkpoint_every = get_or<int>(j, "checkpoint_every", g.checkpoint_every, where);
    g.prune_nats = get_or<double>(j, "prune_nats", g.prune_nats, where);
    return g;
}

LossSpec parse_loss(const json& j, const std::string& where) {
    check_keys(j, where, {"fnm", "fm1", "fm2", "abstain"});
    LossSpec spec;
    spec.fnm = get_or<double>(j, "fnm", spec.fnm, where);
    spec.fm1 = get_or<double>(j, "fm1", spec.fm1, where);
    spec.fm2 = get_or<double>(j, "fm2", spec.fm2, where);
    if (auto a = j.find("abstain"); a != j.end() && !a->is_null())
        spec.abstain = a->get<double>();
    spec.validate();
    return spec;
}

EstimateSettings parse_estimate(const json& j, const std::string& where) {
    check_keys(j, where,
               {"delta", "max_component_full", "max_component_partial",
                "exhaustive_limit"});
    EstimateSettings es;
    if (auto d = j.find("delta"); d != j.end() && !d->is_null()) {
        es.delta = d->get<double>();
        if (*es.delta < 0.0 || *es.delta >= 1.0)
            bad(where, "delta must lie in [0, 1)");
        es.options.fixed_delta = *es.delta;
    }
    es.options.max_component_full =
        get_or<int>(j, "max_component_full", es.options.max_component_full, where);
    es.options.max_component_partial = get_or<int>(
        j, "max_component_partial", es.options.max_component_partial, where);
    es.options.exhaustive_abstain_limit = get_or<int>(
        j, "exhaustive_limit", es.options.exhaustive_abstain_limit, where);
    return es;
}

SimulateSettings parse_simulate(const json& j, const std::string& where) {
    check_keys(j, where,
               {"scenario", "entities", "errors_per_record", "size_mean",
                "max_copies", "tables"});
    SimulateSettings ss;
    ss.scenario = scenario_preset(get_or<std::string>(j, "scenario", "high", where));
    ss.entities = get_or<int>(j, "entities", ss.entities, where);
    if (ss.entities < 1) bad(where, "entities must be >= 1");
    ss.errors_per_record = get_or<int>(j, "errors_per_record", 1, where);
    if (ss.errors_per_record < 0) bad(where, "errors_per_record must be >= 0");
    if (auto m = j.find("size_mean"); m != j.end() && !m->is_null()) {
        if (!ss.scenario.duplicates)
            bad(where, "size_mean only applies to duplicate scenarios");
        ss.scenario.size_mean = m->get<double>();
    }
    if (auto m = j.find("max_copies"); m != j.end() && !m->is_null()) {
        if (!ss.scenario.duplicates)
            bad(where, "max_copies only applies to duplicate scenarios");
        ss.scenario.max_copies = m->get<int>();
    }
    ss.scenario.validate();
    ss.tables_dir = get_or<std::string>(j, "tables", "", where);
    return ss;
}

ReplicateSettings parse_replicate(const json& j, const std::string& where) {
    check_keys(j, where, {"count", "workers", "error_levels"});
    ReplicateSettings rs;
    rs.count = get_or<int>(j, "count", rs.count, where);
    if (rs.count < 1) bad(where, "count must be >= 1");
    rs.workers = get_or<int>(j, "workers", rs.workers, where);
    if (rs.workers < 1) bad(where, "workers must be >= 1");
    if (auto e = j.find("error_levels"); e != j.end() && !e->is_null()) {
        if (e->is_number_integer()) {
            rs.error_levels.push_back(e->get<int>());
        } else if (e->is_array()) {
            for (const auto& v : *e) rs.error_levels.push_back(v.get<int>());
        } else {
            bad(where, "\"error_levels\" must be an integer or an array");
        }
        for (int lvl : rs.error_levels)
            if (lvl < 0) bad(where, "error levels must be >= 0");
    }
    return rs;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    check_keys(j, origin,
               {"seed", "out", "files", "schema", "comparators", "candidates",
                "prior", "likelihood", "gibbs", "loss", "estimate", "simulate",
                "replicate", "truth"});
    RunConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0, origin);
    cfg.out = get_or<std::string>(j, "out", cfg.out, origin);
    if (auto files = j.find("files"); files != j.end()) {
        if (!files->is_array()) bad(origin, "\"files\" must be an array");
        for (const auto& fj : *files) {
            check_keys(fj, origin + ".files[]", {"path", "name", "duplicates"});
            FileSpec spec;
            spec.path = get_or<std::string>(fj, "path", "", origin);
            if (spec.path.empty()) bad(origin, "file entry without a path");
            spec.name = get_or<std::string>(fj, "name", spec.path, origin);
            spec.duplicates_allowed = get_or<bool>(fj, "duplicates", false, origin);
            cfg.files.push_back(spec);
        }
    }
    if (auto s = j.find("schema"); s != j.end())
        cfg.schema = parse_schema(*s, origin + ".schema");
    if (auto c = j.find("comparators"); c != j.end()) {
        if (!c->is_array() || c->empty())
            bad(origin, "\"comparators\" must be a non-empty array");
        for (const auto& cj : *c)
            cfg.comparators.push_back(parse_comparator(cj, origin + ".comparators[]"));
    }
    if (auto c = j.find("candidates"); c != j.end())
        cfg.candidates = parse_candidates(*c, origin + ".candidates");
    if (auto p = j.find("prior"); p != j.end())
        cfg.prior = parse_prior(*p, origin + ".prior");
    if (auto l = j.find("likelihood"); l != j.end()) {
        check_keys(*l, origin + ".likelihood", {"single_model", "mu", "nu"});
        cfg.likelihood.single_model =
            get_or<bool>(*l, "single_model", false, origin);
        cfg.likelihood.mu = get_or<double>(*l, "mu", 1.0, origin);
        cfg.likelihood.nu = get_or<double>(*l, "nu", 1.0, origin);
        if (!(cfg.likelihood.mu > 0.0) || !(cfg.likelihood.nu > 0.0))
            bad(origin, "mu and nu must be positive");
    }
    if (auto g = j.find("gibbs"); g != j.end())
        cfg.gibbs = parse_gibbs(*g, origin + ".gibbs");
    if (auto l = j.find("loss"); l != j.end())
        cfg.loss = parse_loss(*l, origin + ".loss");
    if (auto e = j.find("estimate"); e != j.end())
        cfg.estimate = parse_estimate(*e, origin + ".estimate");
    if (auto s = j.find("simulate"); s != j.end())
        cfg.simulate = parse_simulate(*s, origin + ".simulate");
    if (auto r = j.find("replicate"); r != j.end())
        cfg.replicate = parse_replicate(*r, origin + ".replicate");
    cfg.truth_path = get_or<std::string>(j, "truth", "", origin);
    cfg.gibbs.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    return parse(read_text_file(path), path);
}

Schema RunConfig::effective_schema() const {
    if (!schema.fields.empty()) return schema;
    if (simulate.has_value()) return sim_schema();
    throw ConfigError("no schema configured and no simulation to supply one");
}

std::vector<FileSpec> RunConfig::effective_files() const {
    if (!files.empty()) return files;
    if (simulate.has_value()) {
        std::vector<FileSpec> specs;
        for (int k = 1; k <= kSimFiles; ++k) {
            FileSpec spec;
            spec.name = "file" + std::to_string(k);
            spec.path = out + "/" + spec.name + ".csv";
            spec.duplicates_allowed = simulate->scenario.duplicates;
            specs.push_back(spec);
        }
        return specs;
    }
    throw ConfigError("no input files configured");
}

std::vector<ComparatorSpec> RunConfig::effective_comparators(
    const Schema& schema) const {
    std::vector<ComparatorSpec> specs;
    if (comparators.empty()) {
        if (!simulate.has_value() || !this->schema.fields.empty())
            throw ConfigError("no comparators configured");
        specs = sim_comparators();
    } else {
        for (const auto& [name, spec] : comparators) {
            ComparatorSpec resolved = spec;
            resolved.field = schema.field_index(name);  // throws with the name
            specs.push_back(resolved);
        }
    }
    std::set<int> seen;
    for (const auto& spec : specs) {
        spec.validate(schema);
        if (!seen.insert(spec.field).second)
            throw ConfigError("field compared twice: " +
                              schema.fields[spec.field].name);
    }
    return specs;
}

PriorConfig PriorSettings::build(int num_files, int num_records,
                                 const std::vector<bool>& duplicates_allowed) const {
    if (static_cast<int>(duplicates_allowed.size()) != num_files)
        throw ConfigError("duplicate flags do not match the file count");
    PriorConfig cfg;
    cfg.K = num_files;
    cfg.flat = flat;

    int upper = count_upper.value_or(num_records);
    if (upper < 1) throw ConfigError("cluster-count upper bound must be >= 1");
    switch (count) {
        case Count::uniform:
            cfg.count = ClusterCountPrior::uniform(upper);
            break;
        case Count::negative_binomial: {
            auto [a, q] = negbin_params(num_records);
            cfg.count = ClusterCountPrior::negative_binomial(a, q, upper);
            break;
        }
        case Count::pmf:
            cfg.count = ClusterCountPrior::from_pmf(count_pmf);
            break;
    }

    switch (alpha) {
        case Alpha::preset:
            cfg.overlap = OverlapPrior::default_for(num_files);
            break;
        case Alpha::flat_cells:
            cfg.overlap = OverlapPrior::flat_cells(num_files);
            break;
        case Alpha::sparse_cells:
            cfg.overlap = OverlapPrior::sparse_cells(num_files);
            break;
        case Alpha::explicit_values: {
            cfg.overlap.alpha.assign(std::size_t(1) << num_files, 0.0);
            std::vector<bool> set(cfg.overlap.alpha.size(), false);
            for (const auto& [pattern, value] : alpha_cells) {
                if (static_cast<int>(pattern.size()) != num_files)
                    throw ConfigError("alpha pattern \"" + pattern + "\" needs " +
                                      std::to_string(num_files) + " characters");
                FilePattern bits = 0;
                for (int k = 0; k < num_files; ++k) {
                    if (pattern[k] == '1')
                        bits |= FilePattern(1) << k;
                    else if (pattern[k] != '0')
                        throw ConfigError("alpha pattern \"" + pattern +
                                          "\" must be 0/1 characters");
                }
                if (bits == 0)
                    throw ConfigError("the empty pattern takes no alpha cell");
                if (set[bits])
                    throw ConfigError("alpha pattern \"" + pattern + "\" repeated");
                set[bits] = true;
                cfg.overlap.alpha[bits] = value;
                cfg.overlap.alpha0 += value;
            }
            for (std::size_t h = 1; h < set.size(); ++h)
                if (!set[h])
                    throw ConfigError("alpha is missing a cell for one pattern");
            cfg.overlap.validate();
            break;
        }
    }

    auto make_size = [&](const Size& s) {
        switch (s.kind) {
            case Size::Kind::point:
                return SizePrior::point_mass_one();
            case Size::Kind::poisson:
                return SizePrior::truncated_poisson(s.mean, s.max);
            case Size::Kind::pmf:
                return SizePrior::from_pmf(s.pmf);
        }
        throw ConfigError("unreachable size kind");
    };
    if (sizes.empty()) {
        for (int k = 0; k < num_files; ++k)
            cfg.sizes.push_back(duplicates_allowed[k]
                                    ? SizePrior::truncated_poisson(1.0, 10)
                                    : SizePrior::point_mass_one());
    } else if (sizes.size() == 1) {
        for (int k = 0; k < num_files; ++k) cfg.sizes.push_back(make_size(sizes[0]));
    } else if (static_cast<int>(sizes.size()) == num_files) {
        for (const auto& s : sizes) cfg.sizes.push_back(make_size(s));
    } else {
        throw ConfigError("size priors must list one entry or one per file");
    }

    cfg.validate();
    return cfg;
}

LikelihoodHyper LikelihoodSettings::build(const std::vector<int>& num_levels) const {
    LikelihoodHyper hyper = LikelihoodHyper::unit(num_levels);
    for (auto& field : hyper.mu)
        for (double& v : field) v = mu;
    for (auto& field : hyper.nu)
        for (double& v : field) v = nu;
    return hyper;
}

CandidateSet build_candidate_set(const FileCollection& fc, const Schema& schema,
                                 const std::vector<ComparatorSpec>& comparators,
                                 const CandidateSettings& settings,
                                 bool& fold_excluded) {
    switch (settings.method) {
        case CandidateMethod::all_pairs:
            fold_excluded = true;  // nothing excluded; value irrelevant
            return all_pairs_candidate(fc.num_records());
        case CandidateMethod::block: {
            fold_excluded = false;
            std::vector<int> fields;
            for (const auto& name : settings.block_fields)
                fields.push_back(schema.field_index(name));
            return block_by_fields(fc, fields);
        }
        case CandidateMethod::indexing: {
            fold_excluded = true;
            std::vector<FieldThreshold> thresholds;
            for (const auto& [name, level] : settings.thresholds)
                thresholds.push_back({schema.field_index(name), level});
            auto kept = index_by_disjunction(fc, comparators, thresholds);
            return transitive_closure(fc.num_records(), kept);
        }
    }
    throw ConfigError("unreachable candidate method");
}

}  // namespace multilink
