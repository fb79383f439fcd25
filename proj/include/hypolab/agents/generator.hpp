#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "hypolab/agents/report.hpp"
#include "hypolab/llm/gateway.hpp"

namespace hypolab::agents {

/// Called for every completion an agent makes, for the session log.
using ExchangeObserver = std::function<void(std::string_view agent, const llm::ChatExchange&, const llm::Completion&)>;

/// First balanced JSON object in `response` that carries string
/// "hypothesis" and "request" keys and a boolean-like "test" key. Prose and
/// code fences around it are ignored. Throws ParseError.
GeneratorProposal parse_proposal(std::string_view response);

/// Every balanced {...} span in `text`, outermost first, in order.
std::vector<std::string_view> json_object_spans(std::string_view text);

/// Asks the Generator and parses its reply, re-prompting once with the
/// repair message when the first reply has no usable object.
GeneratorProposal request_proposal(llm::Gateway& gateway, const llm::ChatExchange& exchange,
                                   const ExchangeObserver& observer = {});

}  // namespace hypolab::agents
