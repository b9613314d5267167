#include "common.hpp"

#include <fstream>

namespace isoalign::cli {

namespace {

Json set_summary(const EmbeddingSet& s) {
    Json j{{"rows", s.rows()},
           {"dim", s.dim()},
           {"labeled", s.has_labels()},
           {"model_id", s.model_id},
           {"modality", to_string(s.modality)},
           {"dataset_id", s.dataset_id},
           {"unit_norm", rows_unit_norm(s.data)}};
    if (s.labels) j["classes"] = distinct_labels(s).size();
    return j;
}

std::string read_magic(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    char buf[4] = {};
    in.read(buf, 4);
    if (in.gcount() != 4) throw FormatError("truncated magic", static_cast<std::size_t>(in.gcount()));
    return std::string(buf, 4);
}

} // namespace

void register_io(CLI::App& app, Action& action) {
    {
        struct Opts {
            std::string input, out, model = "unknown", modality = "image", dataset = "unknown", dtype = "f64";
            bool labels = false, normalize = false;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app.add_subcommand("import-csv", "Convert a CSV matrix to EMB1");
        sub->add_option("--input", o->input)->required();
        sub->add_option("--out", o->out)->required();
        sub->add_flag("--labels", o->labels, "First column holds integer labels");
        sub->add_option("--model", o->model);
        sub->add_option("--modality", o->modality)->check(CLI::IsMember({"image", "text"}));
        sub->add_option("--dataset", o->dataset);
        sub->add_option("--dtype", o->dtype)->check(CLI::IsMember({"f32", "f64"}));
        sub->add_flag("--normalize", o->normalize);
        sub->callback([&action, o] {
            action = [o](Context& ctx) {
                require_file(o->input);
                EmbeddingSet s = import_csv(o->input, o->labels);
                s.model_id = o->model;
                s.modality = modality_from_string(o->modality);
                s.dataset_id = o->dataset;
                if (o->normalize) s = normalize(s);
                save_embeddings(s, o->out, o->dtype == "f32" ? Dtype::f32 : Dtype::f64);
                emit(ctx, Json{{"command", "import-csv"}, {"output", o->out}, {"set", set_summary(s)}});
                return kOk;
            };
        });
    }
    {
        struct Opts {
            std::string source, out;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app.add_subcommand("prototypes", "Class prototypes (normalized class means) of a labeled text set");
        sub->add_option("--source", o->source)->required();
        sub->add_option("--out", o->out)->required();
        sub->callback([&action, o] {
            action = [o](Context& ctx) {
                EmbeddingSet s = load_set(o->source);
                EmbeddingSet p = prototypes_as_set(class_prototypes(s));
                save_embeddings(p, o->out);
                emit(ctx, Json{{"command", "prototypes"}, {"output", o->out}, {"set", set_summary(p)}});
                return kOk;
            };
        });
    }
    {
        struct Opts {
            std::string map, source, out;
            bool renormalize = false;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app.add_subcommand("apply", "Apply a map to an embedding file");
        sub->add_option("--map", o->map)->required();
        sub->add_option("--source", o->source)->required();
        sub->add_option("--out", o->out)->required();
        sub->add_flag("--renormalize", o->renormalize);
        sub->callback([&action, o] {
            action = [o](Context& ctx) {
                require_file(o->map);
                AlignmentMap m = load_map(o->map);
                EmbeddingSet s = load_set(o->source);
                EmbeddingSet r = apply(m, s, ApplyOptions{std::nullopt, std::nullopt, o->renormalize});
                save_embeddings(r, o->out);
                emit(ctx, Json{{"command", "apply"}, {"output", o->out}, {"set", set_summary(r)}});
                return kOk;
            };
        });
    }
    {
        struct Opts {
            std::string first, second, out;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app.add_subcommand("compose", "Compose two maps (first, then second)");
        sub->add_option("--first", o->first)->required();
        sub->add_option("--second", o->second)->required();
        sub->add_option("--out", o->out)->required();
        sub->callback([&action, o] {
            action = [o](Context& ctx) {
                require_file(o->first);
                require_file(o->second);
                AlignmentMap m = compose(load_map(o->first), load_map(o->second));
                save_map(m, o->out);
                emit(ctx, Json{{"command", "compose"}, {"output", o->out}, {"map", report::map_summary(m)}});
                return kOk;
            };
        });
    }
    {
        struct Opts {
            std::string map, out;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app.add_subcommand("invert", "Invert a square map");
        sub->add_option("--map", o->map)->required();
        sub->add_option("--out", o->out)->required();
        sub->callback([&action, o] {
            action = [o](Context& ctx) {
                require_file(o->map);
                AlignmentMap m = invert(load_map(o->map));
                save_map(m, o->out);
                emit(ctx, Json{{"command", "invert"}, {"output", o->out}, {"map", report::map_summary(m)}});
                return kOk;
            };
        });
    }
    {
        auto path = std::make_shared<std::string>();
        auto* sub = app.add_subcommand("inspect", "Validate and summarize an EMB1 or MAP1 file");
        sub->add_option("input", *path)->required();
        sub->callback([&action, path] {
            action = [path](Context& ctx) {
                require_file(*path);
                const std::string magic = read_magic(*path);
                if (magic == "EMB1") {
                    EmbeddingSet s = load_embeddings(*path);
                    emit(ctx, Json{{"command", "inspect"}, {"type", "EMB1"}, {"set", set_summary(s)}});
                } else if (magic == "MAP1") {
                    AlignmentMap m = load_map(*path);
                    emit(ctx, Json{{"command", "inspect"}, {"type", "MAP1"}, {"map", report::map_summary(m)}});
                } else {
                    throw FormatError("unknown magic", 0);
                }
                return kOk;
            };
        });
    }
}

} // namespace isoalign::cli
