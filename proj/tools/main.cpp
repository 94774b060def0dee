#include "crm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return crm::cli_main(argc, argv, std::cout, std::cerr); }
