#pragma once

#include "isachar/checksum.hpp"
#include "isachar/classify/classifier.hpp"
#include "isachar/config.hpp"
#include "isachar/corpus.hpp"
#include "isachar/error.hpp"
#include "isachar/eval.hpp"
#include "isachar/features.hpp"
#include "isachar/labels.hpp"
#include "isachar/report.hpp"
#include "isachar/synth.hpp"
#include "isachar/task.hpp"
#include "isachar/version.hpp"
