#pragma once

#include "mccop/latentworld/world.hpp"

#include <json.hpp>

namespace mccop {

nlohmann::json world_to_json(const WorldConfig& world);
WorldConfig world_from_json(const nlohmann::json& j);

}  // namespace mccop
