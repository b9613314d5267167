#include "common.hpp"

#include "isoalign/kernels.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace isoalign::cli {

EmbeddingSet load_set(const std::string& path, bool force_normalize) {
    require_file(path);
    EmbeddingSet s = load_embeddings(path);
    if (force_normalize) return normalize(s);
    s.normalized = rows_unit_norm(s.data);
    return s;
}

void require_file(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw Error(ErrorKind::io, "no such file: " + path);
}

void emit(Context& ctx, const Json& j) { ctx.out << j.dump(2) << '\n'; }

void emit(Context& ctx, const report::LongTable& t) { t.write(ctx.out); }

const std::map<std::string, Method>& method_names() {
    static const std::map<std::string, Method> names{{"orthogonal", Method::orthogonal},
                                                     {"orthogonal-centered", Method::orthogonal_centered},
                                                     {"linear", Method::linear}};
    return names;
}

AlignmentMap fit_with(Method m, const EmbeddingSet& source, const EmbeddingSet& target, double ridge) {
    switch (m) {
    case Method::orthogonal: return fit_orthogonal(source, target, false);
    case Method::orthogonal_centered: return fit_orthogonal(source, target, true);
    case Method::linear: return fit_linear(source, target, true, ridge);
    }
    throw Error(ErrorKind::invalid_argument, "unknown method");
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size()) throw Error(ErrorKind::invalid_argument, "not a count: '" + item + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    kernels::configure_threads_from_env();
    CLI::App app{"Procrustes alignment of contrastive embedding spaces", "isoalign"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string format = "json";
    std::uint64_t seed = 0;
    app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--seed", seed, "Seed for splits, subsamples and generators");

    Action action;
    register_io(app, action);
    register_fit(app, action);
    register_eval(app, action);
    register_theory(app, action);
    register_synth(app, action);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kContractViolation;
    }

    Context ctx{out, err, format == "csv" ? Format::csv : Format::json, seed};
    try {
        return action(ctx);
    } catch (const BoundFailure& e) {
        err << "bound failure: " << e.what() << '\n';
        return kBoundFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::format ? kFormatError : kContractViolation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kContractViolation;
    }
}

} // namespace isoalign::cli
