import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
box = (10, 20, 110, 220)
img2 = img.crop(box)
img2.save(os.path.join(os.environ["PROCESSED_IMAGE_SAVE_PATH"], "transformed_image_1.png"))
