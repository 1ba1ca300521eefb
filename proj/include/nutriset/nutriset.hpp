#pragma once

#include "nutriset/aggregator.hpp"
#include "nutriset/amount_resolver.hpp"
#include "nutriset/dataset_builder.hpp"
#include "nutriset/error.hpp"
#include "nutriset/evalkit.hpp"
#include "nutriset/ingestion.hpp"
#include "nutriset/ingredient_parser.hpp"
#include "nutriset/matcher.hpp"
#include "nutriset/pipeline.hpp"
#include "nutriset/predictions.hpp"
#include "nutriset/rational.hpp"
#include "nutriset/text.hpp"
