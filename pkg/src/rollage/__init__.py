"""AR order selection by rolling averages, and Durbin's MA/ARMA estimator."""
from .arfit import CMLE_LS, YULE_WALKER_LD, cmle_all_orders, fit_all_orders, fit_ar_cmle, levinson_all_orders, pacf, sample_acf
from .criteria import bic_curve, gic_curve
from .durbin import DurbinFit, PtildeRule, fit_arma_durbin, fit_ma_durbin, predict_ptilde_linear, relative_difference_ptilde, relative_error
from .exceptions import RollageError
from .models import ModelSpec, nlrc_closed_form, nlrc_recursive, theoretical_autocovariance, validate_model
from .selection import select_order_rollage, select_ptilde_rollage_star
from .simulate import TimeSeries, random_model, simulate

__version__ = "0.1.0"
