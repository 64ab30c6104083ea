#include <iostream>
#include <string>
#include <vector>

#include "demn/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return demn::cli::run(args, std::cout, std::cerr);
}
