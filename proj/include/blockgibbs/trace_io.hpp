#pragma once

#include <string>

#include "blockgibbs/sampler.hpp"

namespace blockgibbs {

/// Writes a trace as JSON lines, one record per retained iteration:
///   {"iter": int, "c": [int...], "logf": float, "block": {...} | null}
/// with fixed field order, 1-based labels, and round-trip float formatting.
void write_trace_jsonl(const std::string& path, const ChainTrace& trace);

/// Reads a JSON-lines trace back (labels returned 0-based).
ChainTrace read_trace_jsonl(const std::string& path);

}  // namespace blockgibbs
