#pragma once

#include <json.hpp>

#include "geohall/corpus.hpp"

namespace geohall {

using Json = nlohmann::ordered_json;

// Writes PRRecord label fields into `j` in declaration order.
void record_to_json(Json& j, const corpus::PRRecord& r);
// Reads PRRecord label fields; throws FormatError on missing or mistyped keys.
corpus::PRRecord record_from_json(const Json& j);

}  // namespace geohall
