#pragma once

// Seeded batches of precondition-satisfying instances for the bound and
// invariance checks. Instance i is generated from mix_seed(seed, i), so a batch
// gives identical results whether it runs serially or across threads.

#include "isoalign/theory.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace isoalign::theory {

enum class Execution { serial, parallel };

struct InstanceResult {
    std::uint64_t seed = 0;
    double epsilon = 0.0; // measured discrepancy (eta for margin worlds)
    double bound_value = 0.0;
    double observed_max = 0.0;
    bool satisfied = false;
    // margin worlds only
    double gamma = 0.0;
    bool guaranteed = false;
    bool retrieval_correct = false;
    std::optional<BoundReport> bound; // bound sweeps only
};

struct SweepResult {
    std::string name;
    std::vector<InstanceResult> instances;
    std::size_t violations = 0;
};

SweepResult linear_bound_sweep(std::size_t count, std::uint64_t seed, Execution exec = Execution::parallel);
SweepResult text_bound_sweep(std::size_t count, std::uint64_t seed, Execution exec = Execution::parallel);
SweepResult projection_bound_sweep(std::size_t count, std::uint64_t seed, Execution exec = Execution::parallel);

/// satisfied means the implication guaranteed ⇒ retrieval_correct holds.
SweepResult margin_sweep(std::size_t count, std::uint64_t seed, Execution exec = Execution::parallel);

/// Constant-shift residual of curated PMIs on block worlds, against 1e-10.
SweepResult pmi_shift_sweep(std::size_t count, std::uint64_t seed, Execution exec = Execution::parallel);

/// Curation identity residual on generic joints, against 1e-10.
SweepResult curation_identity_sweep(std::size_t count, std::uint64_t seed, Execution exec = Execution::parallel);

/// Negative control: the text bound evaluated with ε′ and δ_f understated as
/// zero, so its precondition fails and violations are expected.
SweepResult negative_control_sweep(std::size_t count, std::uint64_t seed, Execution exec = Execution::parallel);

SweepResult run_sweep(const std::string& name, std::size_t count, std::uint64_t seed,
                      Execution exec = Execution::parallel);

const std::vector<std::string>& sweep_names();

} // namespace isoalign::theory
