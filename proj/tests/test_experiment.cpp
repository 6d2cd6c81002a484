#include <catch2/catch_amalgamated.hpp>

#include "lrd/lrd.hpp"
