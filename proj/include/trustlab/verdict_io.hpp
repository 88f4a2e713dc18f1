#pragma once

#include <ostream>

#include <json.hpp>

#include "trustlab/checkers.hpp"

namespace trustlab {

/// Line-oriented rendering: one `verdict` line, then `violation`, `request` and `stat` lines.
void write_verdict_text(const Verdict& v, std::ostream& os);

/// One JSON object per line: a verdict record, then one record per violation, request and stat.
/// Every record carries the fields of `tags`.
void write_verdict_jsonl(const Verdict& v, std::ostream& os, const nlohmann::json& tags = {});

nlohmann::json to_json(const Violation& v);

}  // namespace trustlab
