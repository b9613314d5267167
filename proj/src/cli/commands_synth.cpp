#include "common.hpp"

#include "isoalign/synth.hpp"

#include <filesystem>
#include <fstream>

namespace isoalign::cli {

void register_synth(CLI::App& app, Action& action) {
    struct Opts {
        std::string out;
        std::size_t d = 8;
        std::optional<std::size_t> d_tilde;
        synth::PlantedParams p;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("synth", "Write a planted two-model scenario as EMB1 files plus scenario.json");
    sub->add_option("--out", o->out, "Output directory")->required();
    sub->add_option("--d", o->p.d)->check(CLI::Range(2, 4096));
    sub->add_option("--d-tilde", o->d_tilde);
    sub->add_option("--n-img", o->p.n_img);
    sub->add_option("--n-txt", o->p.n_txt);
    sub->add_option("--classes", o->p.classes);
    sub->add_option("--noise", o->p.noise_sigma)->check(CLI::NonNegativeNumber);
    sub->add_option("--gap", o->p.gap_norm)->check(CLI::Range(0.0, 2.0));
    sub->add_option("--cap-angle", o->p.cap_angle_deg)->check(CLI::Range(0.0, 180.0));
    sub->add_option("--within", o->p.within_sigma)->check(CLI::NonNegativeNumber);
    sub->callback([&action, o] {
        action = [o](Context& ctx) {
            synth::PlantedParams p = o->p;
            p.d_tilde = o->d_tilde.value_or(p.d);
            p.seed = ctx.seed;
            synth::PlantedScenario sc = synth::make_planted(p);
            namespace fs = std::filesystem;
            fs::create_directories(o->out);
            const fs::path dir(o->out);
            const std::vector<std::pair<std::string, const EmbeddingSet*>> files{
                {"a_image.emb", &sc.f_a}, {"a_text.emb", &sc.g_a}, {"b_image.emb", &sc.f_b}, {"b_text.emb", &sc.g_b}};
            Json names = Json::object();
            for (const auto& [name, set] : files) {
                save_embeddings(*set, dir / name);
                names[name.substr(0, name.size() - 4)] = name;
            }
            Json scenario{{"seed", p.seed},
                          {"params",
                           {{"d", p.d},
                            {"d_tilde", p.d_tilde},
                            {"n_img", p.n_img},
                            {"n_txt", p.n_txt},
                            {"classes", p.classes},
                            {"noise_sigma", p.noise_sigma},
                            {"gap_norm", p.gap_norm},
                            {"cap_angle_deg", p.cap_angle_deg},
                            {"within_sigma", p.within_sigma}}},
                          {"q_true", report::matrix_json(sc.q_true)},
                          {"achieved_gap", report::number(sc.achieved_gap)},
                          {"warnings", sc.warnings},
                          {"files", names}};
            std::ofstream js(dir / "scenario.json");
            js << scenario.dump(2) << '\n';
            if (!js) throw Error(ErrorKind::io, "cannot write scenario.json");
            for (const auto& w : sc.warnings) ctx.err << "warning: " << w << '\n';
            emit(ctx, Json{{"command", "synth"}, {"output", o->out}, {"scenario", scenario}});
            return kOk;
        };
    });
}

} // namespace isoalign::cli
