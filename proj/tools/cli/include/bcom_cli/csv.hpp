#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bcom/control.hpp"
#include "bcom/errors.hpp"
#include "bcom/harness.hpp"

namespace bcom::cli {

class OutputError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kTraceHeader = "t,loss,comparator_loss,cum_regret,updated,logdet_A";
inline constexpr const char* kSweepHeader = "T,seed,final_regret,arm";

// 17 significant digits, shortest %g form.
std::string format_number(double x);

// Each returns the complete file body. A timestamp, when given, becomes a
// leading "# generated <timestamp>" comment line.
std::string trace_csv(const std::vector<TraceRow>& rows, const std::optional<std::string>& timestamp = std::nullopt);
std::string sweep_csv(const std::vector<SweepCell>& cells, const std::optional<std::string>& timestamp = std::nullopt);
// t,y_0..,u_0..,cost,update_flag
std::string trajectory_csv(const ControlRun& run, const std::optional<std::string>& timestamp = std::nullopt);

// Throws OutputError when the file cannot be written.
void write_file(const std::string& path, const std::string& body);

struct ParsedTrace {
  std::vector<TraceRow> rows;
};

// Inverse of trace_csv; skips a leading comment line.
ParsedTrace parse_trace_csv(const std::string& body);

}  // namespace bcom::cli
