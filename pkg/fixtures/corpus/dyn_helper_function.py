import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
def prep(im):
    return im.crop((10, 10, 60, 60))

out = prep(img)
