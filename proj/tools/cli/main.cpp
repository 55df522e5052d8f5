#include <iostream>

#include "bcom_cli/app.hpp"

int main(int argc, char** argv) { return bcom::cli::run_cli(argc, argv, std::cout, std::cerr); }
