#pragma once

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trustlab/trace.hpp"

namespace trustlab {

class FilterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Conjunction of `key=value` terms. `kind` names a message kind (matching message events) or
/// an event kind.
struct TraceFilter {
  std::optional<Seq> seq;
  std::optional<std::uint32_t> replica;
  std::optional<MessageKind> message;
  std::optional<TraceKind> event;

  bool keep(const TraceEvent& e) const;
};

/// Accepts keys seq, replica and kind. Throws FilterError otherwise.
TraceFilter parse_trace_filter(const std::vector<std::string>& terms);

/// Header, then the kept events grouped into one timeline per replica, then the rest.
void explain_trace(const Trace& t, const TraceFilter& filter, std::ostream& os);

}  // namespace trustlab
