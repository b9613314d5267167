#pragma once

// JSON and long-format CSV serialization of reports. Doubles are written in
// shortest round-trip form so repeated runs give byte-identical output.
// Non-finite values become JSON null.

#include "isoalign/metrics.hpp"
#include "isoalign/sweeps.hpp"
#include "isoalign/theory.hpp"

#include <nlohmann/json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace isoalign::report {

using Json = nlohmann::ordered_json;

Json number(double v);
Json matrix_json(const Matrix& m);
Json vector_json(const Vector& v);

Json to_json(const FitStats& s);
Json map_summary(const AlignmentMap& m);
Json to_json(const MetricsReport& r, bool with_predictions = false);
Json to_json(const TwoPathReport& r, bool per_query = false);
Json to_json(const theory::BoundReport& r);
Json to_json(const theory::SpanningReport& r);
Json to_json(const theory::MarginReport& r);
Json to_json(const theory::ShiftReport& r);
Json to_json(const theory::SweepResult& r, bool with_instances = false);

/// Long-format table: one value per row.
struct LongTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
    void write(std::ostream& out) const;
};

std::string format_double(double v);

} // namespace isoalign::report
