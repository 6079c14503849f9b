#pragma once

#include "config.hpp"
#include "convert.hpp"
#include "corpus.hpp"
#include "dist.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "ingest.hpp"
#include "model.hpp"
#include "random.hpp"
#include "report.hpp"
#include "run_config.hpp"
#include "synthetic.hpp"
#include "transfer.hpp"
