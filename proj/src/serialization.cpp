#include "pft/serialization.hpp"

#include "pft/error.hpp"

#include <fstream>

namespace pft {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

} // namespace

void to_json(json& j, const ModelSpec& spec) {
    j = json{{"kind", to_string(spec.kind)},
             {"p", spec.input_len},
             {"hidden", spec.hidden},
             {"activation", to_string(spec.activation)}};
}

void from_json(const json& j, ModelSpec& spec) {
    spec.kind = model_kind_from_string(j.at("kind").get<std::string>());
    spec.input_len = j.at("p").get<Index>();
    spec.hidden = j.at("hidden").get<Index>();
    spec.activation = activation_from_string(j.at("activation").get<std::string>());
    spec.validate();
}

void to_json(json& j, const WeightVector& w) {
    to_json(j, w.spec);
    j["values"] = vector_to_json(w.values);
}

void from_json(const json& j, WeightVector& w) {
    from_json(j, w.spec);
    w.values = vector_from_json(j.at("values"));
    if (w.values.size() != w.spec.parameter_count())
        throw DataError("weight vector has " + std::to_string(w.values.size()) + " values; architecture needs " +
                        std::to_string(w.spec.parameter_count()));
}

void to_json(json& j, const Clustering& c) {
    j = json{{"k", c.k()}, {"inertia", c.inertia}, {"n_min", c.n_min}, {"clusters", json::array()}};
    for (const auto& cl : c.clusters)
        j["clusters"].push_back({{"size", cl.size()}, {"centroid", vector_to_json(cl.centroid)}, {"members", cl.members}});
}

void from_json(const json& j, Clustering& c) {
    c.inertia = j.at("inertia").get<double>();
    c.n_min = j.at("n_min").get<Index>();
    c.clusters.clear();
    for (const auto& cl : j.at("clusters"))
        c.clusters.push_back({vector_from_json(cl.at("centroid")), cl.at("members").get<std::vector<Index>>()});
}

void to_json(json& j, const SpecialistPool& pool) {
    j = json{{"spec", pool.spec},
             {"base_weights", pool.base_weights},
             {"tau", pool.tau},
             {"tau_fraction", pool.tau_fraction},
             {"inter_cluster", to_string(pool.inter_mode)},
             {"max_size", pool.max_size},
             {"recent_capacity", pool.recent.capacity()},
             {"recent", vector_to_json(pool.recent.tail())},
             {"next_id", pool.next_id},
             {"adaptations", pool.adaptations},
             {"specialists", json::array()}};
    for (const auto& s : pool.specialists) {
        json e{{"id", s.id},
               {"centroid", vector_to_json(s.centroid)},
               {"weights", vector_to_json(s.weights.values)},
               {"train_count", s.train_count},
               {"fine_tune_seed", s.fine_tune_seed}};
        e["created_at"] = s.created_at ? json(*s.created_at) : json("offline");
        j["specialists"].push_back(std::move(e));
    }
}

void from_json(const json& j, SpecialistPool& pool) {
    pool.spec = j.at("spec").get<ModelSpec>();
    pool.base_weights = j.at("base_weights").get<WeightVector>();
    pool.tau = j.at("tau").get<double>();
    pool.tau_fraction = j.at("tau_fraction").get<double>();
    pool.inter_mode = inter_cluster_mode_from_string(j.at("inter_cluster").get<std::string>());
    pool.max_size = j.at("max_size").get<Index>();
    pool.recent = RecentBuffer(j.at("recent_capacity").get<Index>());
    for (double x : j.at("recent").get<std::vector<double>>()) pool.recent.push(x);
    pool.next_id = j.at("next_id").get<int>();
    pool.adaptations = j.at("adaptations").get<Index>();
    pool.specialists.clear();
    for (const auto& e : j.at("specialists")) {
        Specialist s;
        s.id = e.at("id").get<int>();
        s.centroid = vector_from_json(e.at("centroid"));
        s.weights = {pool.spec, vector_from_json(e.at("weights"))};
        if (s.weights.size() != pool.spec.parameter_count() || s.centroid.size() != pool.spec.input_len)
            throw DataError("specialist " + std::to_string(s.id) + " does not match the pool architecture");
        s.train_count = e.at("train_count").get<Index>();
        s.fine_tune_seed = e.at("fine_tune_seed").get<std::uint64_t>();
        if (e.at("created_at").is_number()) s.created_at = e.at("created_at").get<Index>();
        pool.specialists.push_back(std::move(s));
    }
}

void to_json(json& j, const MetricRow& r) {
    j = json{{"dataset", r.dataset},     {"model", r.model},
             {"strategy", r.strategy},   {"rmse", r.rmse},
             {"nrmse", r.nrmse},         {"runtime_total_s", r.runtime_total_s},
             {"runtime_adapt_s", r.runtime_adapt_s}, {"n_forecasts", r.n_forecasts}};
}

void from_json(const json& j, MetricRow& r) {
    j.at("dataset").get_to(r.dataset);
    j.at("model").get_to(r.model);
    j.at("strategy").get_to(r.strategy);
    j.at("rmse").get_to(r.rmse);
    j.at("nrmse").get_to(r.nrmse);
    j.at("runtime_total_s").get_to(r.runtime_total_s);
    j.at("runtime_adapt_s").get_to(r.runtime_adapt_s);
    j.at("n_forecasts").get_to(r.n_forecasts);
}

void to_json(json& j, const StrategySummary& s) {
    j = json{{"model", s.model},
             {"strategy", s.strategy},
             {"datasets", s.datasets},
             {"avg_nrmse", s.avg_nrmse},
             {"std_nrmse", s.std_nrmse},
             {"avg_local_rank", s.avg_local_rank},
             {"avg_global_rank", s.avg_global_rank},
             {"std_global_rank", s.std_global_rank},
             {"avg_runtime_total_s", s.avg_runtime_total_s},
             {"avg_runtime_adapt_s", s.avg_runtime_adapt_s}};
}

void from_json(const json& j, StrategySummary& s) {
    j.at("model").get_to(s.model);
    j.at("strategy").get_to(s.strategy);
    j.at("datasets").get_to(s.datasets);
    j.at("avg_nrmse").get_to(s.avg_nrmse);
    j.at("std_nrmse").get_to(s.std_nrmse);
    j.at("avg_local_rank").get_to(s.avg_local_rank);
    j.at("avg_global_rank").get_to(s.avg_global_rank);
    j.at("std_global_rank").get_to(s.std_global_rank);
    j.at("avg_runtime_total_s").get_to(s.avg_runtime_total_s);
    j.at("avg_runtime_adapt_s").get_to(s.avg_runtime_adapt_s);
}

void to_json(json& j, const EvaluationReport& r) {
    j = json{{"rows", r.rows}, {"local_ranks", r.local_ranks}, {"global_ranks", r.global_ranks}, {"summary", r.summary}};
}

void from_json(const json& j, EvaluationReport& r) {
    j.at("rows").get_to(r.rows);
    j.at("local_ranks").get_to(r.local_ranks);
    j.at("global_ranks").get_to(r.global_ranks);
    j.at("summary").get_to(r.summary);
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void save_pool(const SpecialistPool& pool, const std::filesystem::path& path) { write_json(json(pool), path); }

SpecialistPool load_pool(const std::filesystem::path& path) {
    try {
        return read_json(path).get<SpecialistPool>();
    } catch (const json::exception& e) {
        throw DataError("malformed pool file '" + path.string() + "': " + e.what());
    }
}

} // namespace pft
