// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sforge/error.hpp"
#include "sforge/io.hpp"
#include "sforge/geometry.hpp"
#include "sforge/block.hpp"
#include "sforge/state_machine.hpp"
#include "sforge/dag.hpp"
#include "sforge/map/model.hpp"
#include "sforge/map/waypoint_graph.hpp"
#include "sforge/map/routing.hpp"
#include "sforge/map/progress.hpp"
#include "sforge/map/render.hpp"
#include "sforge/retrieval.hpp"
#include "sforge/llm/gateway.hpp"
#include "sforge/llm/live.hpp"
#include "sforge/agents/observation.hpp"
#include "sforge/agents/helper.hpp"
#include "sforge/agents/map_agent.hpp"
#include "sforge/agents/registry.hpp"
#include "sforge/scenario.hpp"
#include "sforge/orchestrator/react.hpp"
#include "sforge/orchestrator/run_task.hpp"
#include "sforge/orchestrator/tasks.hpp"
#include "sforge/service/session.hpp"
#include "sforge/service/pipeline.hpp"
#include "sforge/service/http.hpp"
