#include "blockgibbs/trace_io.hpp"

#include <fstream>

#include <json.hpp>

#include "blockgibbs/csv.hpp"

namespace blockgibbs {

void write_trace_jsonl(const std::string& path, const ChainTrace& trace) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("write_trace", "cannot open " + path + " for writing");
  }
  // hand-formatted to pin the field order and float representation
  for (const TraceRecord& rec : trace.records) {
    out << "{\"iter\": " << rec.iteration << ", \"c\": [";
    for (std::size_t i = 0; i < rec.assignment.size(); ++i) {
      if (i > 0) out << ", ";
      out << rec.assignment[i] + 1;
    }
    out << "], \"logf\": " << format_double(rec.log_density) << ", \"block\": ";
    if (rec.block_move) {
      out << "{\"proposal\": [";
      for (std::size_t i = 0; i < rec.block_move->proposal.size(); ++i) {
        if (i > 0) out << ", ";
        out << rec.block_move->proposal[i] + 1;
      }
      out << "], \"accepted\": " << (rec.block_move->accepted ? "true" : "false")
          << ", \"ratio\": " << format_double(rec.block_move->ratio) << "}";
    } else {
      out << "null";
    }
    out << "}\n";
  }
}

ChainTrace read_trace_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("read_trace", "cannot open " + path);
  }
  ChainTrace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    TraceRecord rec;
    rec.iteration = j.at("iter").get<long>();
    for (const auto& c : j.at("c")) {
      rec.assignment.push_back(c.get<int>() - 1);
    }
    rec.log_density = j.at("logf").get<double>();
    if (!j.at("block").is_null()) {
      BlockMoveRecord bm;
      for (const auto& p : j["block"].at("proposal")) {
        bm.proposal.push_back(p.get<int>() - 1);
      }
      bm.accepted = j["block"].at("accepted").get<bool>();
      bm.ratio = j["block"].at("ratio").get<double>();
      rec.block_move = std::move(bm);
    }
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace blockgibbs
