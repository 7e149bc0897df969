#pragma once

// Everything at once.
#include "traitsim/backend.hpp"
#include "traitsim/behavior.hpp"
#include "traitsim/bfi_inventory.hpp"
#include "traitsim/catalog.hpp"
#include "traitsim/csv.hpp"
#include "traitsim/error.hpp"
#include "traitsim/expectations.hpp"
#include "traitsim/gateway.hpp"
#include "traitsim/http_backend.hpp"
#include "traitsim/invest_sim.hpp"
#include "traitsim/json_extract.hpp"
#include "traitsim/mock_policy.hpp"
#include "traitsim/persona.hpp"
#include "traitsim/pipeline.hpp"
#include "traitsim/prompting.hpp"
#include "traitsim/run_config.hpp"
#include "traitsim/stats.hpp"
#include "traitsim/survey.hpp"
#include "traitsim/text.hpp"
