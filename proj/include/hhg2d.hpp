#pragma once

#include "hhg2d/units_field.hpp"
#include "hhg2d/saddle_solver.hpp"
#include "hhg2d/saddle_taxonomy.hpp"
#include "hhg2d/dipole_engine.hpp"
#include "hhg2d/polarization.hpp"
#include "hhg2d/trajectory.hpp"
#include "hhg2d/phase_scan.hpp"
#include "hhg2d/oracle_integrator.hpp"
#include "hhg2d/config.hpp"
#include "hhg2d/csv_io.hpp"
#include "hhg2d/commands.hpp"
