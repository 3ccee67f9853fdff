#pragma once

#include "surfslide/geometry.hpp"
#include "surfslide/slider_core.hpp"
#include "surfslide/contact.hpp"
#include "surfslide/slider.hpp"
#include "surfslide/oracle.hpp"
#include "surfslide/scenarios.hpp"
