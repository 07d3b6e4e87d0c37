"""Small datasets used by the examples, recipes, and tests."""
import numpy as np


def cavendish():
    """29 density-of-the-earth measurements (g/cm^3)."""
    return np.array([
        5.50, 5.61, 5.88, 5.07, 5.26, 5.55, 5.36, 5.29, 5.58, 5.65,
        5.57, 5.53, 5.62, 5.29, 5.44, 5.34, 5.79, 5.10, 5.27, 5.39,
        5.42, 5.47, 5.63, 5.34, 5.46, 5.30, 5.75, 5.68, 5.85,
    ])


def linkage_counts():
    """Genetic linkage cell counts; cell probabilities
    ((2+phi)/4, (1-phi)/4, (1-phi)/4, phi/4) for phi in (0, 1)."""
    return np.array([25, 3, 4, 7])


def normand_trial1():
    """Two-arm binary outcome counts, trial 1: (y1, y2, n1, n2)."""
    return 1, 2, 43, 39


def normand_trial6():
    """Two-arm binary outcome counts, trial 6: (y1, y2, n1, n2)."""
    return 4, 11, 146, 154


def psychiatric_counts():
    """First-episode diagnosis counts over 4 categories, n = 220."""
    return np.array([91, 49, 37, 43])


def gamma_sample_25():
    """A fixed n = 25 draw from Gamma(shape 7, scale 3), sample mean 21.33.

    Pinned as a literal so contours, predictions, and oracle values in the
    tests do not depend on generator details.
    """
    return np.array([
        21.500433154231644, 16.968012172448873, 37.43026705020021,
        17.583702546769242, 22.25828489301164, 28.568044635743068,
        17.5595361449187, 23.7351293589192, 24.528105221395236,
        20.998577372592862, 27.251662548629987, 22.67142373382579,
        13.147899864779305, 40.53556241485234, 9.372314258183454,
        27.251604675521737, 29.56958720675175, 21.675824527537284,
        18.713648935996925, 12.463470352992092, 21.941432563366586,
        14.643666448431539, 15.94639741386263, 18.23432424126956,
        8.71926953729237,
    ])


def gamma31_sample_25():
    """A fixed n = 25 draw from Gamma(shape 3, scale 1).

    The 0.7-quantile of the generating distribution is 3.6156; the draw is
    pinned so the quantile contour and its regions are reproducible.
    """
    return np.array([
        3.2717488481855277, 3.243482683545999, 4.435160684280992,
        1.8824207180524184, 3.3074142546423717, 2.7133497877275112,
        1.6357712057678246, 1.9543071547757584, 2.7320599666723613,
        1.582766854127419, 2.679984902386189, 5.387213894345312,
        2.3913257180400085, 3.030979829862752, 2.47145447971,
        1.2317528731325573, 7.586806047367551, 3.9026073900921503,
        0.7792277860626888, 2.8486766669839327, 1.699328293733622,
        1.4022871214209307, 2.8256485442273886, 1.9223961652840098,
        4.402714387009128,
    ])
