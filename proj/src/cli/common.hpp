#pragma once

#include "isoalign/cli.hpp"
#include "isoalign/error.hpp"
#include "isoalign/report.hpp"

#include <CLI11.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace isoalign::cli {

using report::Json;

enum class Format { json, csv };

struct Context {
    std::ostream& out;
    std::ostream& err;
    Format format = Format::json;
    std::uint64_t seed = 0;
};

using Action = std::function<int(Context&)>;

// Each registrar adds its subcommands to `app` and stores the chosen action.
void register_io(CLI::App& app, Action& action);
void register_fit(CLI::App& app, Action& action);
void register_eval(CLI::App& app, Action& action);
void register_theory(CLI::App& app, Action& action);
void register_synth(CLI::App& app, Action& action);

// Raised for a failed bound or assertion; maps to exit 1.
class BoundFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Loads an EMB1 file and marks it normalized when every row is unit norm.
EmbeddingSet load_set(const std::string& path, bool force_normalize = false);

/// Fails with a contract violation unless the file exists.
void require_file(const std::string& path);

void emit(Context& ctx, const Json& j);
void emit(Context& ctx, const report::LongTable& t);

enum class Method { orthogonal, orthogonal_centered, linear };
const std::map<std::string, Method>& method_names();
AlignmentMap fit_with(Method m, const EmbeddingSet& source, const EmbeddingSet& target, double ridge = 0.0);

std::vector<std::size_t> parse_size_list(const std::string& s);

} // namespace isoalign::cli
