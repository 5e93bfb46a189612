#pragma once

#include <string>
#include <string_view>

// Prompt templates sent to model providers.
namespace vapt::prompts {

std::string_view day_base();
std::string_view deeper_stage_directives();
std::string_view vertical_strategy();
std::string_view horizontal_strategy();
std::string_view strategy_response_schema();

std::string_view topic_extraction();
std::string_view value_node_scoring();

// Wraps one PVQ item text in the item-scoring instruction.
std::string pvq_item(std::string_view item_text);
std::string_view pvq_item_schema();

std::string_view persona_chat_history();
std::string_view persona_survey();
std::string_view persona_anti();
std::string_view persona_random();

}  // namespace vapt::prompts
