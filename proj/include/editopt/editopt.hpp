#pragma once

#include "editopt/element.hpp"
#include "editopt/molecule.hpp"
#include "editopt/validity.hpp"
#include "editopt/canonical.hpp"
#include "editopt/smiles.hpp"
#include "editopt/edits.hpp"
#include "editopt/rng.hpp"
#include "editopt/properties.hpp"
#include "editopt/pairminer.hpp"
#include "editopt/scorer.hpp"
#include "editopt/search.hpp"
#include "editopt/metrics.hpp"
#include "editopt/cli.hpp"
