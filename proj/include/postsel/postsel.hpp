#ifndef POSTSEL_POSTSEL_HPP
#define POSTSEL_POSTSEL_HPP

#include "postsel/error.hpp"
#include "postsel/linalg.hpp"
#include "postsel/distributions.hpp"
#include "postsel/selection.hpp"
#include "postsel/inference.hpp"
#include "postsel/simulation.hpp"
#include "postsel/report.hpp"

#endif  // POSTSEL_POSTSEL_HPP
