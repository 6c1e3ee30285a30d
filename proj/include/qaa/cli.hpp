#pragma once
#include <string>
#include <vector>
namespace qaa { int run_command(const std::vector<std::string>& args); }
