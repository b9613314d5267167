#include "common.hpp"

#include "isoalign/theory.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace isoalign::cli {

namespace {

void add_method(CLI::App* sub, std::string& method) {
    std::vector<std::string> names;
    for (const auto& [n, m] : method_names()) names.push_back(n);
    sub->add_option("--method", method, "orthogonal, orthogonal-centered or linear")->check(CLI::IsMember(names));
}

double max_row_deviation(const RowMatrix& a, const RowMatrix& b) {
    return a.rows() ? (a - b).rowwise().norm().maxCoeff() : 0.0;
}

std::pair<EmbeddingSet, EmbeddingSet> subsample_pair(const EmbeddingSet& a, const EmbeddingSet& b, double fraction,
                                                     std::uint64_t seed) {
    if (fraction >= 1.0) return {a, b};
    Partition p = split_indices(a, SplitSpec::fraction(fraction, seed));
    return {select_rows(a, p.first), select_rows(b, p.first)};
}

} // namespace

void register_fit(CLI::App& app, Action& action) {
    {
        struct Opts {
            std::string source, target, out, method = "orthogonal", modality;
            double ridge = 0.0;
            bool normalize = false;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app.add_subcommand("fit", "Fit a map from paired source/target embeddings");
        sub->add_option("--source", o->source)->required();
        sub->add_option("--target", o->target)->required();
        sub->add_option("--out", o->out)->required();
        add_method(sub, o->method);
        sub->add_option("--ridge", o->ridge, "Ridge penalty for the linear method")->check(CLI::NonNegativeNumber);
        sub->add_option("--fit-modality", o->modality, "Recorded fit modality (default: from the source file)")
            ->check(CLI::IsMember({"image", "text", "anchors", "synthetic"}));
        sub->add_flag("--normalize", o->normalize, "Normalize rows before fitting");
        sub->callback([&action, o] {
            action = [o](Context& ctx) {
                EmbeddingSet s = load_set(o->source, o->normalize);
                EmbeddingSet t = load_set(o->target, o->normalize);
                check_paired(s, t);
                AlignmentMap m = fit_with(method_names().at(o->method), s, t, o->ridge);
                if (!o->modality.empty()) m.fit_modality = fit_modality_from_string(o->modality);
                save_map(m, o->out);
                emit(ctx, Json{{"command", "fit"},
                               {"method", o->method},
                               {"output", o->out},
                               {"map", report::map_summary(m)}});
                return kOk;
            };
        });
    }
    {
        struct Opts {
            std::string a, b, c, method = "orthogonal";
            double subsample = 0.95;
            std::optional<double> max_deviation;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app.add_subcommand("cycle", "Round-trip (A to B to A) and composition (A to B to C vs A to C) checks");
        sub->add_option("--a", o->a, "Model A embeddings")->required();
        sub->add_option("--b", o->b, "Model B embeddings, paired with A")->required();
        sub->add_option("--c", o->c, "Model C embeddings, paired with A");
        add_method(sub, o->method);
        sub->add_option("--subsample", o->subsample, "Fraction of pairs each map is fit on")
            ->check(CLI::Range(0.01, 1.0));
        sub->add_option("--max-deviation", o->max_deviation, "Exit 1 when a pointwise deviation exceeds this");
        sub->callback([&action, o] {
            action = [o](Context& ctx) {
                const Method method = method_names().at(o->method);
                EmbeddingSet a = load_set(o->a), b = load_set(o->b);
                std::optional<EmbeddingSet> c;
                if (!o->c.empty()) c = load_set(o->c);
                check_paired(a, b);
                if (c) check_paired(a, *c);

                auto fit_sub = [&](const EmbeddingSet& s, const EmbeddingSet& t, std::uint64_t stream) {
                    auto [ss, ts] = subsample_pair(s, t, o->subsample, linalg::mix_seed(ctx.seed, stream));
                    return fit_with(method, ss, ts);
                };
                AlignmentMap q_ab = fit_sub(a, b, 0);
                AlignmentMap q_ba = fit_sub(b, a, 1);
                AlignmentMap round = compose(q_ab, q_ba);
                const auto d = static_cast<Eigen::Index>(a.dim());
                Json out{{"command", "cycle"}, {"method", o->method}, {"subsample", o->subsample}};
                double worst = 0.0;
                {
                    double dev = max_row_deviation(apply_rows(round, a.data), a.data);
                    worst = std::max(worst, dev);
                    Json cyc{{"pointwise_max", report::number(dev)}};
                    if (round.q.rows() == d) cyc["identity_fro"] = report::number((round.q - Matrix::Identity(d, d)).norm());
                    out["cycle"] = std::move(cyc);
                }
                if (c) {
                    AlignmentMap q_bc = fit_sub(b, *c, 2);
                    AlignmentMap q_ac = fit_sub(a, *c, 3);
                    AlignmentMap chain = compose(q_ab, q_bc);
                    double dev = max_row_deviation(apply_rows(chain, a.data), apply_rows(q_ac, a.data));
                    worst = std::max(worst, dev);
                    out["composition"] = Json{{"fro", report::number((chain.q - q_ac.q).norm())},
                                              {"pointwise_max", report::number(dev)}};
                }
                if (ctx.format == Format::csv) {
                    report::LongTable t{{"check", "field", "value"}, {}};
                    for (const char* key : {"cycle", "composition"})
                        if (out.contains(key))
                            for (const auto& [f, v] : out[key].items())
                                t.add({key, f, v.is_null() ? "nan" : report::format_double(v.get<double>())});
                    emit(ctx, t);
                } else {
                    emit(ctx, out);
                }
                if (o->max_deviation && !(worst <= *o->max_deviation)) {
                    throw BoundFailure("pointwise deviation " + report::format_double(worst) + " exceeds " +
                                       report::format_double(*o->max_deviation));
                }
                return kOk;
            };
        });
    }
    {
        struct Opts {
            std::string src_img, tgt_img, src_txt, tgt_txt, n_list, method = "orthogonal";
            bool recenter = false;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app.add_subcommand("sweep", "Seen/unseen class sweep: fit on N classes, evaluate both partitions");
        sub->add_option("--source-image", o->src_img)->required();
        sub->add_option("--target-image", o->tgt_img)->required();
        sub->add_option("--source-text", o->src_txt)->required();
        sub->add_option("--target-text", o->tgt_txt)->required();
        sub->add_option("--classes", o->n_list, "Comma-separated seen-class counts N")->required();
        add_method(sub, o->method);
        sub->add_flag("--recenter", o->recenter, "Center text with its own means when applying");
        sub->callback([&action, o] {
            action = [o](Context& ctx) {
                EmbeddingSet si = load_set(o->src_img), ti = load_set(o->tgt_img);
                EmbeddingSet st = load_set(o->src_txt), tt = load_set(o->tgt_txt);
                check_paired(si, ti);
                check_paired(st, tt);
                if (!si.labels || !st.labels) throw Error(ErrorKind::structural, "sweep needs labeled images and texts");
                std::vector<Label> classes = distinct_labels(si);
                std::shuffle(classes.begin(), classes.end(), Rng(ctx.seed));
                const auto ns = parse_size_list(o->n_list);
                for (auto n : ns)
                    if (n == 0 || n > classes.size())
                        throw Error(ErrorKind::invalid_argument, "N = " + std::to_string(n) + " outside [1, " +
                                                                     std::to_string(classes.size()) + "]");
                const Method method = method_names().at(o->method);

                report::LongTable table{{"N", "subset", "metric", "value"}, {}};
                Json rows = Json::array();
                auto record = [&](std::size_t n, const char* subset, const char* metric, double v) {
                    table.add({std::to_string(n), subset, metric, report::format_double(v)});
                    rows.push_back({{"N", n}, {"subset", subset}, {"metric", metric}, {"value", report::number(v)}});
                };
                for (auto n : ns) {
                    std::vector<Label> seen(classes.begin(), classes.begin() + static_cast<std::ptrdiff_t>(n));
                    std::set<Label> seen_set(seen.begin(), seen.end());
                    Partition img = split_indices(si, SplitSpec::by_class(seen));
                    Partition txt;
                    for (std::size_t i = 0; i < st.rows(); ++i)
                        (seen_set.count((*st.labels)[i]) ? txt.first : txt.second).push_back(i);
                    EmbeddingSet seen_img = select_rows(si, img.first);
                    AlignmentMap m = fit_with(method, seen_img, select_rows(ti, img.first));
                    record(n, "seen", "sym_spanning", theory::sym_spanning(seen_img.data, ctx.seed, 0).spanning ? 1.0 : 0.0);
                    ApplyOptions text_opts;
                    if (o->recenter) {
                        text_opts.mu_source = linalg::row_mean(st.data);
                        text_opts.mu_target = linalg::row_mean(tt.data);
                    }
                    for (int part = 0; part < 2; ++part) {
                        const auto& ii = part == 0 ? img.first : img.second;
                        const auto& tx = part == 0 ? txt.first : txt.second;
                        const char* subset = part == 0 ? "seen" : "unseen";
                        if (ii.empty()) continue;
                        EmbeddingSet a = apply(m, select_rows(si, ii)), b = select_rows(ti, ii);
                        record(n, subset, "image_cosine", paired_cosine(a, b).mean_cosine);
                        record(n, subset, "image_l2", paired_l2(a, b).mean_l2);
                        if (tx.empty()) continue;
                        EmbeddingSet at = apply(m, select_rows(st, tx), text_opts), bt = select_rows(tt, tx);
                        record(n, subset, "text_cosine", paired_cosine(at, bt).mean_cosine);
                        record(n, subset, "text_l2", paired_l2(at, bt).mean_l2);
                        // Zero-shot restricted to this partition's classes; images
                        // without a text prototype are left out.
                        ClassPrototypes protos = class_prototypes(bt);
                        std::set<Label> have(protos.class_ids.begin(), protos.class_ids.end());
                        std::vector<std::size_t> keep;
                        for (std::size_t i = 0; i < a.rows(); ++i)
                            if (have.count((*a.labels)[i])) keep.push_back(i);
                        if (!keep.empty()) record(n, subset, "zero_shot_top1", zero_shot(select_rows(a, keep), protos).top1_accuracy);
                    }
                }
                if (ctx.format == Format::csv)
                    emit(ctx, table);
                else
                    emit(ctx, Json{{"command", "sweep"}, {"method", o->method}, {"seed", ctx.seed}, {"rows", rows}});
                return kOk;
            };
        });
    }
}

} // namespace isoalign::cli
