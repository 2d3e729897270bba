#include "critbranch/models.hpp"
