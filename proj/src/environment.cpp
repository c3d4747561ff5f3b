#include "remlab/environment.hpp"
