#include "haesum/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return haesum::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
