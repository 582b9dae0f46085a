"""Transmission schemes and block plans."""
from .mat import (OrderSymbolLedger, build_structure, draw_betas, mat_decode,
                  mat_order_combine, mat_order_recover, mat_partial_schedule, mat_rates)
from .overload import (SideInfo, compute_side_info, overload_encode, overload_rates,
                       side_info_from_h, stacked_decode)
from .params import SchemeParams, solve_params
from .plans import (Plan, Segment, aggregation_schedule, corner_plan, make_plan, mat_plan,
                    optimal_plan, overload_plan, timeshare_plan, zf_plan)
from .quantizer import QuantizedSideInfo, dequantize, quantize
from .zf import common_rate, single_user_rate, zf_precoders, zf_rates, zf_transmit
