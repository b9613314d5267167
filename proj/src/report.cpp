#include "isoalign/report.hpp"

#include <charconv>
#include <cmath>

namespace isoalign::report {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
    return out;
}

Json matrix_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) vector_json(m.row(i).transpose()).swap(out.emplace_back());
    return out;
}

Json to_json(const FitStats& s) {
    return Json{{"residual", number(s.residual)}, {"sigma_min", number(s.sigma_min)}, {"n", s.n}};
}

Json map_summary(const AlignmentMap& m) {
    return Json{{"kind", to_string(m.kind)},
                {"fit_modality", to_string(m.fit_modality)},
                {"source_model", m.source_model},
                {"target_model", m.target_model},
                {"source_dim", m.source_dim()},
                {"target_dim", m.target_dim()},
                {"centered", m.has_means()},
                {"orthogonality_defect", number(linalg::orthogonality_defect(m.q))},
                {"stats", to_json(m.stats)}};
}

Json to_json(const MetricsReport& r, bool with_predictions) {
    Json out{{"n_queries", r.n_queries}};
    if (r.predictions.empty()) {
        out["mean_cosine"] = number(r.mean_cosine);
        out["std_cosine"] = number(r.std_cosine);
        out["mean_l2"] = number(r.mean_l2);
    } else {
        out["top1_accuracy"] = number(r.top1_accuracy);
    }
    if (!r.per_class_accuracy.empty()) {
        Json pc = Json::object();
        for (const auto& [c, a] : r.per_class_accuracy) pc[std::to_string(c)] = number(a);
        out["per_class_accuracy"] = std::move(pc);
    }
    if (with_predictions) out["predictions"] = r.predictions;
    return out;
}

Json to_json(const TwoPathReport& r, bool per_query) {
    Json out{{"k", r.k},
             {"k_clamped", r.k_clamped},
             {"n_queries", r.overlap.size()},
             {"mean_overlap", number(r.mean_overlap)},
             {"class_match_fraction", number(r.class_match_fraction)},
             {"direct_class_accuracy", number(r.direct_class_accuracy)}};
    if (per_query) {
        Json q = Json::array();
        for (std::size_t i = 0; i < r.overlap.size(); ++i)
            q.push_back({{"query", i}, {"overlap", number(r.overlap[i])}, {"class_match", bool(r.class_match[i])}});
        out["queries"] = std::move(q);
    }
    return out;
}

Json to_json(const theory::BoundReport& r) {
    return Json{{"epsilon", number(r.epsilon)},
                {"epsilon_prime", number(r.epsilon_prime)},
                {"delta_f", number(r.delta_f)},
                {"sigma_min_gtilde", number(r.sigma_min_gtilde)},
                {"sigma_min_f", number(r.sigma_min_f)},
                {"bound_value", number(r.bound_value)},
                {"observed_max", number(r.observed_max)},
                {"rho", number(r.rho)},
                {"unprojected_max", number(r.unprojected_max)},
                {"satisfied", r.satisfied}};
}

Json to_json(const theory::SpanningReport& r) {
    return Json{{"rank", r.rank}, {"required", r.required}, {"spanning", r.spanning}, {"kappa_lower", number(r.kappa_lower)}};
}

Json to_json(const theory::MarginReport& r) {
    return Json{{"gamma", number(r.gamma)},
                {"eta", number(r.eta)},
                {"guaranteed", r.guaranteed},
                {"retrieval_correct", r.retrieval_correct}};
}

Json to_json(const theory::ShiftReport& r) {
    return Json{{"delta", number(r.delta)}, {"max_residual", number(r.max_residual)}};
}

Json to_json(const theory::SweepResult& r, bool with_instances) {
    double worst_ratio = 0.0;
    std::size_t guaranteed = 0;
    for (const auto& i : r.instances) {
        if (i.bound_value > 0.0) worst_ratio = std::max(worst_ratio, i.observed_max / i.bound_value);
        guaranteed += i.guaranteed;
    }
    Json out{{"name", r.name}, {"instances", r.instances.size()}, {"violations", r.violations}};
    if (r.name == "margin") {
        out["guaranteed"] = guaranteed;
    } else {
        out["max_observed_over_bound"] = number(worst_ratio);
    }
    Json bad = Json::array();
    for (const auto& i : r.instances)
        if (!i.satisfied) bad.push_back(i.seed);
    out["violating_seeds"] = std::move(bad);
    if (with_instances) {
        Json all = Json::array();
        for (const auto& i : r.instances) {
            Json j{{"seed", i.seed},
                   {"epsilon", number(i.epsilon)},
                   {"bound_value", number(i.bound_value)},
                   {"observed_max", number(i.observed_max)},
                   {"satisfied", i.satisfied}};
            if (r.name == "margin") {
                j["gamma"] = number(i.gamma);
                j["guaranteed"] = i.guaranteed;
                j["retrieval_correct"] = i.retrieval_correct;
            }
            if (i.bound) j["report"] = to_json(*i.bound);
            all.push_back(std::move(j));
        }
        out["instance_results"] = std::move(all);
    }
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_row(std::ostream& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << '\n';
}

} // namespace

void LongTable::write(std::ostream& out) const {
    write_row(out, columns);
    for (const auto& r : rows) write_row(out, r);
}

} // namespace isoalign::report
