#include "bcom_cli/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace bcom::cli {

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void preamble(std::string& out, const std::optional<std::string>& timestamp, const char* header) {
  if (timestamp) out += "# generated " + *timestamp + "\n";
  out += header;
  out += '\n';
}

}  // namespace

std::string trace_csv(const std::vector<TraceRow>& rows, const std::optional<std::string>& timestamp) {
  std::string out;
  preamble(out, timestamp, kTraceHeader);
  for (const TraceRow& r : rows) {
    out += std::to_string(r.t) + "," + format_number(r.loss) + "," + format_number(r.comparator_loss) + "," +
           format_number(r.cum_regret) + "," + (r.updated ? "1" : "0") + "," + format_number(r.logdet) + "\n";
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepCell>& cells, const std::optional<std::string>& timestamp) {
  std::string out;
  preamble(out, timestamp, kSweepHeader);
  for (const SweepCell& c : cells) {
    out += std::to_string(c.horizon) + "," + std::to_string(c.seed) + "," + format_number(c.final_regret) + "," +
           to_string(c.arm) + "\n";
  }
  return out;
}

std::string trajectory_csv(const ControlRun& run, const std::optional<std::string>& timestamp) {
  const Index dy = run.y.empty() ? 0 : run.y[0].size();
  const Index du = run.u.empty() ? 0 : run.u[0].size();
  std::string header = "t";
  for (Index i = 0; i < dy; ++i) header += ",y_" + std::to_string(i);
  for (Index i = 0; i < du; ++i) header += ",u_" + std::to_string(i);
  header += ",cost,update_flag";
  std::string out;
  preamble(out, timestamp, header.c_str());
  for (std::size_t t = 0; t < run.y.size(); ++t) {
    out += std::to_string(t + 1);
    for (Index i = 0; i < dy; ++i) out += "," + format_number(run.y[t](i));
    for (Index i = 0; i < du; ++i) out += "," + format_number(run.u[t](i));
    out += "," + format_number(run.cost[t]) + "," + (run.updated[t] ? "1" : "0") + "\n";
  }
  return out;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw OutputError("cannot open '" + path + "' for writing");
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw OutputError("failed writing '" + path + "'");
}

ParsedTrace parse_trace_csv(const std::string& body) {
  std::istringstream in(body);
  std::string line;
  ParsedTrace out;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!header_seen) {
      if (!line.empty() && line[0] == '#') continue;
      if (line != kTraceHeader) throw Error("trace CSV: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw Error("trace CSV: expected 6 columns in '" + line + "'");
    TraceRow r;
    r.t = std::stoll(cells[0]);
    r.loss = std::stod(cells[1]);
    r.comparator_loss = std::stod(cells[2]);
    r.cum_regret = std::stod(cells[3]);
    r.updated = cells[4] == "1";
    r.logdet = std::stod(cells[5]);
    out.rows.push_back(r);
  }
  if (!header_seen) throw Error("trace CSV: missing header");
  return out;
}

}  // namespace bcom::cli
