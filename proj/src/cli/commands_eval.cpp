#include "common.hpp"

#include <cmath>

namespace isoalign::cli {

namespace {

struct EvalFiles {
    std::string map, src_img, tgt_img, src_txt, tgt_txt, src_protos, tgt_protos;
    bool recenter = false;
};

void add_inputs(CLI::App* sub, EvalFiles& f, bool prototypes) {
    sub->add_option("--map", f.map)->required();
    sub->add_option("--source-image", f.src_img)->required();
    sub->add_option("--target-image", f.tgt_img)->required();
    sub->add_option("--source-text", f.src_txt)->required();
    sub->add_option("--target-text", f.tgt_txt)->required();
    if (prototypes) {
        sub->add_option("--source-prototypes", f.src_protos, "Labeled EMB1 of source class prototypes");
        sub->add_option("--target-prototypes", f.tgt_protos, "Labeled EMB1 of target class prototypes");
    }
    sub->add_flag("--recenter", f.recenter, "Center text with its own means when applying the map");
}

struct Loaded {
    AlignmentMap map;
    EmbeddingSet src_img, tgt_img, src_txt, tgt_txt;
    ApplyOptions text_opts;
};

Loaded load_all(const EvalFiles& f) {
    require_file(f.map);
    Loaded l{load_map(f.map), load_set(f.src_img), load_set(f.tgt_img), load_set(f.src_txt), load_set(f.tgt_txt), {}};
    for (const auto* s : {&l.src_img, &l.src_txt})
        if (s->dim() != l.map.source_dim()) throw Error(ErrorKind::dimension, "source files do not match the map");
    for (const auto* s : {&l.tgt_img, &l.tgt_txt})
        if (s->dim() != l.map.target_dim()) throw Error(ErrorKind::dimension, "target files do not match the map");
    if (f.recenter) {
        l.text_opts.mu_source = linalg::row_mean(l.src_txt.data);
        l.text_opts.mu_target = linalg::row_mean(l.tgt_txt.data);
    }
    return l;
}

Json paired(const EmbeddingSet& a, const EmbeddingSet& b) {
    MetricsReport c = paired_cosine(a, b), l = paired_l2(a, b);
    return Json{{"n", c.n_queries},
                {"mean_cosine", report::number(c.mean_cosine)},
                {"std_cosine", report::number(c.std_cosine)},
                {"mean_l2", report::number(l.mean_l2)}};
}

} // namespace

void register_eval(CLI::App& app, Action& action) {
    {
        auto f = std::make_shared<EvalFiles>();
        auto* sub = app.add_subcommand("eval", "Full metric battery before and after alignment");
        add_inputs(sub, *f, true);
        sub->callback([&action, f] {
            action = [f](Context& ctx) {
                Loaded l = load_all(*f);
                check_paired(l.src_img, l.tgt_img);
                check_paired(l.src_txt, l.tgt_txt);
                const bool same_dim = l.map.source_dim() == l.map.target_dim();
                EmbeddingSet a_img = apply(l.map, l.src_img), a_txt = apply(l.map, l.src_txt, l.text_opts);

                std::vector<std::string> warnings;
                Json metrics = Json::array();
                auto add = [&](const std::string& name, const std::function<Json(bool)>& compute) {
                    Json before = same_dim ? compute(false) : Json(nullptr);
                    metrics.push_back({{"name", name}, {"before", before}, {"after", compute(true)}});
                };
                add("image_paired", [&](bool after) { return paired(after ? a_img : l.src_img, l.tgt_img); });
                add("text_paired", [&](bool after) { return paired(after ? a_txt : l.src_txt, l.tgt_txt); });

                const bool img_labels = l.src_img.has_labels() && l.tgt_img.has_labels();
                const bool txt_labels = l.src_txt.has_labels() && l.tgt_txt.has_labels();
                if (img_labels) {
                    add("image_retrieval", [&](bool after) {
                        return report::to_json(class_retrieval_top1(after ? a_img : l.src_img, l.tgt_img));
                    });
                } else {
                    warnings.push_back("image labels missing: image_retrieval and zero-shot skipped");
                }
                if (txt_labels) {
                    add("text_retrieval", [&](bool after) {
                        return report::to_json(class_retrieval_top1(after ? a_txt : l.src_txt, l.tgt_txt));
                    });
                } else {
                    warnings.push_back("text labels missing: text_retrieval skipped");
                }

                // Source prototypes live in source space; the aligned ones are
                // the normalized means of the aligned source texts.
                std::optional<ClassPrototypes> p_src, p_tgt, p_aligned;
                if (!f->src_protos.empty()) {
                    p_src = prototypes_from_set(load_set(f->src_protos));
                    p_aligned = prototypes_from_set(apply(l.map, prototypes_as_set(*p_src), l.text_opts));
                } else if (l.src_txt.has_labels()) {
                    p_src = class_prototypes(l.src_txt);
                    p_aligned = class_prototypes(a_txt);
                }
                if (!f->tgt_protos.empty())
                    p_tgt = prototypes_from_set(load_set(f->tgt_protos));
                else if (l.tgt_txt.has_labels())
                    p_tgt = class_prototypes(l.tgt_txt);

                if (img_labels && p_src && p_tgt) {
                    add("zero_shot_aligned_image_vs_target_text", [&](bool after) {
                        return report::to_json(zero_shot(after ? a_img : l.src_img, *p_tgt));
                    });
                    add("zero_shot_target_image_vs_aligned_text", [&](bool after) {
                        return report::to_json(zero_shot(l.tgt_img, after ? *p_aligned : *p_src));
                    });
                    Json native = report::to_json(zero_shot(l.src_img, *p_src));
                    metrics.push_back({{"name", "zero_shot_aligned_image_vs_aligned_text"},
                                       {"before", native},
                                       {"after", report::to_json(zero_shot(a_img, *p_aligned))}});
                } else if (img_labels) {
                    warnings.push_back("no prototypes available: zero-shot skipped");
                }

                Json diag{{"modality_gap_source", report::number(modality_gap(l.src_img, l.src_txt))},
                          {"modality_gap_target", report::number(modality_gap(l.tgt_img, l.tgt_txt))},
                          {"modality_gap_aligned", report::number(modality_gap(a_img, a_txt))}};
                try {
                    diag["kernel_cka"] =
                        report::number(cka(multimodal_kernel(l.src_img, l.src_txt), multimodal_kernel(l.tgt_img, l.tgt_txt)));
                } catch (const Error& e) {
                    warnings.push_back(std::string("kernel_cka skipped: ") + e.what());
                }
                for (const auto& w : warnings) ctx.err << "warning: " << w << '\n';

                if (ctx.format == Format::csv) {
                    report::LongTable t{{"metric", "stage", "field", "value"}, {}};
                    for (const auto& m : metrics)
                        for (const char* stage : {"before", "after"}) {
                            if (m[stage].is_null()) continue;
                            for (const auto& [k, v] : m[stage].items()) {
                                if (v.is_number()) t.add({m["name"], stage, k, report::format_double(v.get<double>())});
                                if (v.is_object())
                                    for (const auto& [c, a] : v.items())
                                        t.add({m["name"], stage, k + ":" + c, report::format_double(a.get<double>())});
                            }
                        }
                    for (const auto& [k, v] : diag.items())
                        t.add({"diagnostics", "", k, v.is_null() ? "nan" : report::format_double(v.get<double>())});
                    emit(ctx, t);
                } else {
                    emit(ctx, Json{{"command", "eval"},
                                   {"map", report::map_summary(l.map)},
                                   {"recenter", f->recenter},
                                   {"metrics", metrics},
                                   {"diagnostics", diag},
                                   {"warnings", warnings}});
                }
                return kOk;
            };
        });
    }
    {
        auto f = std::make_shared<EvalFiles>();
        auto k = std::make_shared<std::size_t>(5);
        auto* sub = app.add_subcommand("two-path", "Direct vs text-mediated cross-model image retrieval");
        add_inputs(sub, *f, false);
        sub->add_option("--k", *k, "Neighbours per query")->check(CLI::PositiveNumber);
        sub->callback([&action, f, k] {
            action = [f, k](Context& ctx) {
                Loaded l = load_all(*f);
                TwoPathReport r = two_path_retrieval(l.src_img, l.src_txt, l.tgt_img, l.tgt_txt, l.map, *k, {}, l.text_opts);
                if (r.k_clamped) ctx.err << "warning: k clamped to gallery size " << r.k << '\n';
                if (ctx.format == Format::csv) {
                    report::LongTable t{{"query", "metric", "value"}, {}};
                    for (std::size_t i = 0; i < r.overlap.size(); ++i) {
                        t.add({std::to_string(i), "overlap", report::format_double(r.overlap[i])});
                        t.add({std::to_string(i), "class_match", r.class_match[i] ? "1" : "0"});
                    }
                    t.add({"all", "mean_overlap", report::format_double(r.mean_overlap)});
                    t.add({"all", "class_match_fraction", report::format_double(r.class_match_fraction)});
                    if (std::isfinite(r.direct_class_accuracy))
                        t.add({"all", "direct_class_accuracy", report::format_double(r.direct_class_accuracy)});
                    emit(ctx, t);
                } else {
                    emit(ctx, Json{{"command", "two-path"}, {"report", report::to_json(r, true)}});
                }
                return kOk;
            };
        });
    }
}

} // namespace isoalign::cli
