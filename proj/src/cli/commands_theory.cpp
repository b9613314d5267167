#include "common.hpp"

#include "isoalign/sweeps.hpp"

namespace isoalign::cli {

void register_theory(CLI::App& app, Action& action) {
    struct Opts {
        std::size_t count = 1000;
        std::vector<std::string> sweeps;
        std::string execution = "parallel";
        std::string spanning;
        bool instances = false, negative = false;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("theory", "Seeded verification sweeps of the bounds and invariance results");
    sub->add_option("--count", o->count, "Instances per sweep")->check(CLI::PositiveNumber);
    sub->add_option("--sweep", o->sweeps, "Sweep to run (repeatable; default all)")
        ->check(CLI::IsMember(theory::sweep_names()));
    sub->add_option("--execution", o->execution)->check(CLI::IsMember({"serial", "parallel"}));
    sub->add_option("--spanning", o->spanning, "Also report Sym(d)-spanning of this embedding file");
    sub->add_flag("--instances", o->instances, "Include per-instance results");
    sub->add_flag("--negative-controls", o->negative,
                  "Also run precondition-violating controls (reported, never fail the run)");
    sub->callback([&action, o] {
        action = [o](Context& ctx) {
            const auto exec = o->execution == "serial" ? theory::Execution::serial : theory::Execution::parallel;
            std::optional<EmbeddingSet> images;
            if (!o->spanning.empty()) images = load_set(o->spanning);
            const auto& names = o->sweeps.empty() ? theory::sweep_names() : o->sweeps;

            Json sweeps = Json::array();
            report::LongTable t{{"sweep", "field", "value"}, {}};
            std::size_t violations = 0;
            std::string first_bad;
            auto record = [&](const theory::SweepResult& r, Json& into) {
                into.push_back(report::to_json(r, o->instances));
                t.add({r.name, "instances", std::to_string(r.instances.size())});
                t.add({r.name, "violations", std::to_string(r.violations)});
            };
            for (std::size_t i = 0; i < names.size(); ++i) {
                auto r = theory::run_sweep(names[i], o->count, linalg::mix_seed(ctx.seed, 100 + i), exec);
                violations += r.violations;
                for (const auto& inst : r.instances)
                    if (!inst.satisfied && first_bad.empty()) first_bad = r.name + " seed " + std::to_string(inst.seed);
                record(r, sweeps);
            }
            Json controls = Json::array();
            if (o->negative) record(theory::negative_control_sweep(o->count, linalg::mix_seed(ctx.seed, 99), exec), controls);

            Json out{{"command", "theory"}, {"seed", ctx.seed}, {"count", o->count}, {"sweeps", sweeps}};
            if (o->negative) out["negative_controls"] = controls;
            if (images) {
                auto sp = theory::sym_spanning(images->data, ctx.seed);
                out["spanning"] = report::to_json(sp);
                t.add({"spanning", "rank", std::to_string(sp.rank)});
                t.add({"spanning", "required", std::to_string(sp.required)});
                t.add({"spanning", "kappa_lower", report::format_double(sp.kappa_lower)});
            }
            out["passed"] = violations == 0;
            if (ctx.format == Format::csv)
                emit(ctx, t);
            else
                emit(ctx, out);
            if (violations) throw BoundFailure(std::to_string(violations) + " violation(s); first: " + first_bad);
            return kOk;
        };
    });
}

} // namespace isoalign::cli
